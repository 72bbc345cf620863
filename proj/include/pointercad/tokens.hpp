#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mathx.hpp"

namespace pcad {

// Label / pointer-state token ids. Value bins occupy [24, 24 + 2^q).
enum Tok : int {
    kTokEm = 1,   // end of model
    kTokEs = 2,   // end of step
    kTokSs = 3,   // start of sketch
    kTokSe = 4,   // start of extrusion
    kTokSc = 5,   // start of chamfer
    kTokSf = 6,   // start of fillet
    kTokSp = 7,   // start of profile
    kTokSl = 8,   // start of loop
    kTokSx = 9,   // start of curve
    kTokPe = 10,  // enabled pointer (payload present)
    kTokPd = 11,  // disabled pointer
    kTokOrCw = 12,
    kTokOrCcw = 13,
    kTokDrXp = 14,
    kTokDrXn = 15,
    kTokDrYp = 16,
    kTokDrYn = 17,
    kTokDrZp = 18,
    kTokDrZn = 19,
    kTokBoNew = 20,
    kTokBoJoin = 21,
    kTokBoCut = 22,
    kTokBoIntersect = 23,
    kTokValueBase = 24,
};

struct QuantConfig {
    int q = 8;  // bit width; 2^q bins

    int bins() const { return 1 << q; }
    int max_bin() const { return bins() - 1; }
    int vocab_size() const { return kTokValueBase + bins(); }
};

enum class ValueKind { Nv, Ag };

// Affine map taking raw nv quantities into [0,1]. Recorded in the stream
// header so decoding is self-contained.
struct ValueNorm {
    double lo = 0.0;
    double hi = 1.0;

    double to_unit(double v) const { return (v - lo) / (hi - lo); }
    double from_unit(double u) const { return lo + u * (hi - lo); }
};

inline int quantize_value(double v, const QuantConfig& cfg, ValueKind kind) {
    double u;
    if (kind == ValueKind::Nv) {
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << "nv value " << v << " outside [0,1]";
            throw RangeError(os.str());
        }
        u = v;
    } else {
        v = wrap_angle_deg(v);
        u = v / 360.0;
    }
    long long bin = round_half_away(u * cfg.max_bin());
    if (bin < 0) bin = 0;
    if (bin > cfg.max_bin()) bin = cfg.max_bin();
    return static_cast<int>(bin);
}

inline double dequantize_value(int bin, const QuantConfig& cfg, ValueKind kind) {
    if (bin < 0 || bin >= cfg.bins()) {
        std::ostringstream os;
        os << "bin " << bin << " outside [0," << cfg.bins() << ")";
        throw RangeError(os.str());
    }
    double u = static_cast<double>(bin) / cfg.max_bin();
    return kind == ValueKind::Nv ? u : u * 360.0;
}

// Reference to a geometric entity, the wire form of a pointer payload.
struct EntityRef {
    enum class Kind { Face, Edge, BasePlane };
    int step_index = 0;  // step whose pre-state the reference resolves against
    Kind kind = Kind::Face;
    int stable_id = 0;

    bool operator==(const EntityRef& o) const {
        return kind == o.kind && stable_id == o.stable_id;
    }
    bool operator!=(const EntityRef& o) const { return !(*this == o); }
};

inline const char* to_string(EntityRef::Kind k) {
    switch (k) {
        case EntityRef::Kind::Face: return "face";
        case EntityRef::Kind::Edge: return "edge";
        default: return "base_plane";
    }
}

struct TokenStream {
    QuantConfig cfg;
    ValueNorm norm;
    std::vector<int> tokens;
    std::map<int, EntityRef> pointer_payloads;  // position -> ref, only at id 10

    bool payload_invariant_ok() const {
        for (size_t i = 0; i < tokens.size(); ++i) {
            bool has = pointer_payloads.count(static_cast<int>(i)) > 0;
            if ((tokens[i] == kTokPe) != has) return false;
        }
        return pointer_payloads.size() ==
               static_cast<size_t>(std::count(tokens.begin(), tokens.end(), kTokPe));
    }
};

// Absolute-parameter baseline stream: per sketch three Euler angles (Z-Y-X)
// plus three translations, raw 2D points, no pointers.
struct LegacyStream {
    QuantConfig cfg;
    ValueNorm norm;
    std::vector<int> tokens;
};

}  // namespace pcad
