#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "errors.hpp"

namespace pcad {

using Vecd = std::vector<double>;

inline double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
// log(sigmoid(x)) without overflow for large |x|
inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// ---------------------------------------------------------------------------
// Dense building blocks
// ---------------------------------------------------------------------------

struct Linear {
    int in = 0, out = 0;
    Vecd w;  // out x in, row-major
    Vecd b;  // out

    Vecd apply(const Vecd& x) const {
        if (static_cast<int>(x.size()) != in) throw ShapeError("linear input size mismatch");
        Vecd y(out);
        for (int o = 0; o < out; ++o) {
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += w[o * in + i] * x[i];
            y[o] = acc;
        }
        return y;
    }

    static Linear identity(int n) {
        Linear l{n, n, Vecd(static_cast<size_t>(n) * n, 0.0), Vecd(n, 0.0)};
        for (int i = 0; i < n; ++i) l.w[i * n + i] = 1.0;
        return l;
    }
    static Linear zero(int in, int out) {
        return {in, out, Vecd(static_cast<size_t>(in) * out, 0.0), Vecd(out, 0.0)};
    }
    static Linear random(int in, int out, std::mt19937& rng) {
        Linear l{in, out, Vecd(static_cast<size_t>(in) * out), Vecd(out)};
        std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(in));
        for (auto& x : l.w) x = d(rng);
        for (auto& x : l.b) x = 0.1 * d(rng);
        return l;
    }
};

// Two-layer perceptron with a smooth rectifier between the layers. The
// activation can be switched off so hand-computed fixtures stay linear.
struct Mlp {
    Linear l1, l2;
    bool smooth = true;  // softplus after the first layer

    Vecd apply(const Vecd& x) const {
        Vecd h = l1.apply(x);
        if (smooth)
            for (double& v : h) v = softplus(v);
        return l2.apply(h);
    }

    static Mlp identity(int n) { return {Linear::identity(n), Linear::identity(n), false}; }
    static Mlp random(int n, int hidden, std::mt19937& rng) {
        return {Linear::random(n, hidden, rng), Linear::random(hidden, n, rng), true};
    }
};

// ---------------------------------------------------------------------------
// Multi-head attention
// ---------------------------------------------------------------------------

struct MhaParams {
    int dim = 128;
    int heads = 8;  // head dim = dim / heads
    Linear wq, wk, wv, wo;

    static MhaParams identity(int dim, int heads) {
        return {dim, heads, Linear::identity(dim), Linear::identity(dim),
                Linear::identity(dim), Linear::identity(dim)};
    }
    static MhaParams random(int dim, int heads, std::mt19937& rng) {
        return {dim, heads, Linear::random(dim, dim, rng), Linear::random(dim, dim, rng),
                Linear::random(dim, dim, rng), Linear::random(dim, dim, rng)};
    }
};

// Scaled dot-product attention of a single query against a set of keys and
// values, per head, concatenated and output-projected.
inline Vecd mha(const Vecd& query, const std::vector<Vecd>& keys, const std::vector<Vecd>& values,
                const MhaParams& p) {
    if (p.dim % p.heads != 0) throw ShapeError("head count must divide feature dim");
    if (keys.size() != values.size()) throw ShapeError("key/value count mismatch");
    if (keys.empty()) return Vecd(p.dim, 0.0);
    int hd = p.dim / p.heads;
    Vecd q = p.wq.apply(query);
    std::vector<Vecd> k(keys.size()), v(keys.size());
    for (size_t n = 0; n < keys.size(); ++n) {
        k[n] = p.wk.apply(keys[n]);
        v[n] = p.wv.apply(values[n]);
    }
    Vecd concat(p.dim, 0.0);
    for (int h = 0; h < p.heads; ++h) {
        int off = h * hd;
        Vecd scores(keys.size());
        double mx = -1e300;
        for (size_t n = 0; n < keys.size(); ++n) {
            double s = 0;
            for (int d = 0; d < hd; ++d) s += q[off + d] * k[n][off + d];
            scores[n] = s / std::sqrt(static_cast<double>(hd));
            mx = std::max(mx, scores[n]);
        }
        double z = 0;
        for (double& s : scores) {
            s = std::exp(s - mx);
            z += s;
        }
        for (size_t n = 0; n < keys.size(); ++n)
            for (int d = 0; d < hd; ++d) concat[off + d] += scores[n] / z * v[n][off + d];
    }
    return p.wo.apply(concat);
}

// ---------------------------------------------------------------------------
// GNN layer
// ---------------------------------------------------------------------------

struct GnnParams {
    int dim = 128;
    Mlp phi, psi;
    Linear f_theta, f_xi;
    double eps = 0.0, gamma = 0.0;
    MhaParams attn;

    static GnnParams identity(int dim, int heads = 1) {
        return {dim,
                Mlp::identity(dim),
                Mlp::identity(dim),
                Linear::identity(dim),
                Linear::identity(dim),
                0.0,
                0.0,
                MhaParams::identity(dim, heads)};
    }
    static GnnParams random(int dim, int heads, std::mt19937& rng) {
        return {dim,
                Mlp::random(dim, dim, rng),
                Mlp::random(dim, dim, rng),
                Linear::random(dim, dim, rng),
                Linear::random(dim, dim, rng),
                0.1,
                0.1,
                MhaParams::random(dim, heads, rng)};
    }
};

struct Graph {
    std::vector<Vecd> nodes;                 // node features
    std::vector<std::pair<int, int>> edges;  // undirected (i, j), i < j
    std::vector<Vecd> edge_feats;            // parallel to edges
};

// One message-passing round. Nodes aggregate gated neighbour features through
// their incident edges; edges take a residual update from attention over all
// nodes plus an MLP of the endpoint sum.
inline Graph gnn_layer(const Graph& g, const GnnParams& p) {
    for (const auto& h : g.nodes)
        if (static_cast<int>(h.size()) != p.dim) throw ShapeError("node feature dim mismatch");
    if (g.edges.size() != g.edge_feats.size()) throw ShapeError("edge/feature count mismatch");
    for (const auto& h : g.edge_feats)
        if (static_cast<int>(h.size()) != p.dim) throw ShapeError("edge feature dim mismatch");
    for (const auto& [i, j] : g.edges)
        if (i < 0 || j < 0 || i >= static_cast<int>(g.nodes.size()) ||
            j >= static_cast<int>(g.nodes.size()))
            throw ShapeError("edge endpoint out of range");

    Graph out = g;
    // node update: h_i' = phi((1+eps) h_i + sum_j f_theta(h_ij) * h_j)
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        Vecd acc(p.dim);
        for (int d = 0; d < p.dim; ++d) acc[d] = (1.0 + p.eps) * g.nodes[i][d];
        for (size_t e = 0; e < g.edges.size(); ++e) {
            int a = g.edges[e].first, b = g.edges[e].second;
            int j = -1;
            if (a == static_cast<int>(i)) j = b;
            if (b == static_cast<int>(i)) j = a;
            if (j < 0) continue;
            Vecd gate = p.f_theta.apply(g.edge_feats[e]);
            for (int d = 0; d < p.dim; ++d) acc[d] += gate[d] * g.nodes[j][d];
        }
        out.nodes[i] = p.phi.apply(acc);
    }
    // edge update: h_ij' = h_ij + MHA(h_ij, nodes, nodes)
    //                    + psi((1+gamma) h_ij + f_xi(h_i + h_j))
    for (size_t e = 0; e < g.edges.size(); ++e) {
        const auto& [i, j] = g.edges[e];
        Vecd att = mha(g.edge_feats[e], g.nodes, g.nodes, p.attn);
        Vecd sum(p.dim);
        for (int d = 0; d < p.dim; ++d) sum[d] = g.nodes[i][d] + g.nodes[j][d];
        Vecd mix = p.f_xi.apply(sum);
        Vecd inner(p.dim);
        for (int d = 0; d < p.dim; ++d)
            inner[d] = (1.0 + p.gamma) * g.edge_feats[e][d] + mix[d];
        Vecd res = p.psi.apply(inner);
        for (int d = 0; d < p.dim; ++d)
            out.edge_feats[e][d] = g.edge_feats[e][d] + att[d] + res[d];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossConfig {
    double alpha = 0.1;      // label smoothing
    double tau = 0.07;       // contrastive temperature, s = 1/tau clipped at 100
    double lambda_v = 0.5;
    double lambda_p = 0.5;
};

constexpr double kMaxInverseTemp = 100.0;

inline double clip_inverse_temp(double s) { return std::min(s, kMaxInverseTemp); }

inline Vecd softmax(const Vecd& logits) {
    double mx = -1e300;
    for (double x : logits) mx = std::max(mx, x);
    Vecd p(logits.size());
    double z = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

// Cross-entropy with label smoothing: the target puts 1-alpha on class y and
// spreads alpha uniformly over the other N-1 classes.
inline double label_value_loss(const Vecd& logits, int y, double alpha, Vecd* grad = nullptr) {
    int n = static_cast<int>(logits.size());
    if (n < 2) throw ConfigError("label smoothing needs at least two classes");
    if (y < 0 || y >= n) throw ConfigError("target class out of range");
    Vecd p = softmax(logits);
    double loss = 0;
    Vecd w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = i == y ? 1.0 - alpha : alpha / (n - 1);
        loss -= w[i] * std::log(std::max(p[i], 1e-300));
    }
    if (grad) {
        grad->resize(n);
        for (int i = 0; i < n; ++i) (*grad)[i] = p[i] - w[i];
    }
    return loss;
}

inline double cosine(const Vecd& a, const Vecd& b) {
    if (a.size() != b.size()) throw ShapeError("cosine dimension mismatch");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return dot / std::sqrt(na * nb);
}

// Binary contrastive pointer loss over the candidate set: positives should
// sigmoid towards one, negatives towards zero, with the cosine scaled by the
// inverse temperature s = 1/tau.
// grad_p (optional) receives dL/dp; grad_log_s receives dL/d(log s).
inline double pointer_loss(const Vecd& p, const std::vector<Vecd>& candidates,
                           const std::vector<int>& positives, const std::vector<int>& negatives,
                           double tau, Vecd* grad_p = nullptr, double* grad_log_s = nullptr) {
    if (tau <= 0) throw ConfigError("temperature must be positive");
    if (positives.empty() && negatives.empty())
        throw ConfigError("pointer loss needs at least one candidate");
    double s = clip_inverse_temp(1.0 / tau);
    double m = static_cast<double>(positives.size() + negatives.size());
    double loss = 0;
    if (grad_p) grad_p->assign(p.size(), 0.0);
    if (grad_log_s) *grad_log_s = 0.0;

    double pn = 0;
    for (double x : p) pn += x * x;
    pn = std::sqrt(pn);

    auto accumulate = [&](int idx, bool positive) {
        const Vecd& c = candidates[idx];
        double cos = cosine(p, c);
        double x = s * cos;
        // log sigma(x) for positives, log(1 - sigma(x)) = log sigma(-x) otherwise
        loss -= positive ? log_sigmoid(x) : log_sigmoid(-x);
        double dl_dx = (sigmoid(x) - (positive ? 1.0 : 0.0)) / m;
        if (grad_log_s && s < kMaxInverseTemp) *grad_log_s += dl_dx * x;  // d(s cos)/d log s = s cos
        if (grad_p && pn > 0) {
            double cn = 0;
            for (double v : c) cn += v * v;
            cn = std::sqrt(cn);
            for (size_t d = 0; d < p.size(); ++d) {
                double dcos = c[d] / (pn * cn) - cos * p[d] / (pn * pn);
                (*grad_p)[d] += dl_dx * s * dcos;
            }
        }
    };
    for (int i : positives) accumulate(i, true);
    for (int i : negatives) accumulate(i, false);
    return loss / m;
}

inline double total_loss(double l_v, double l_p, double lambda_v, double lambda_p) {
    return lambda_v * l_v + lambda_p * l_p;
}

// Central-difference comparison against an analytic gradient; returns the
// maximum relative error over all coordinates.
inline double grad_check(const std::function<double(const Vecd&)>& f, const Vecd& at,
                         const Vecd& analytic, double fd_step = 1e-5) {
    if (at.size() != analytic.size()) throw ShapeError("gradient size mismatch");
    double worst = 0;
    for (size_t i = 0; i < at.size(); ++i) {
        Vecd hi = at, lo = at;
        hi[i] += fd_step;
        lo[i] -= fd_step;
        double fd = (f(hi) - f(lo)) / (2 * fd_step);
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace pcad
