#include "tpms/weights.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tpms {

bool weights_valid(const WeightVector& w) {
    for (int i = 0; i < kNumPrimitives; ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(w[i])) return false;
    }
    return std::abs(w.sum() - 1.0) <= kWeightSumTol;
}

void check_weights(const WeightVector& w) {
    if (!weights_valid(w)) {
        throw std::invalid_argument("weight vector must be nonnegative and sum to 1: " + format_weights(w));
    }
}

std::string format_weights(const WeightVector& w) {
    std::string out;
    char buf[32];
    for (int i = 0; i < kNumPrimitives; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", w[i]);
        if (i) out += ',';
        out += buf;
    }
    return out;
}

WeightVector parse_weights(const std::string& text) {
    WeightVector w;
    std::stringstream ss(text);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ',')) {
        if (i >= kNumPrimitives) throw std::invalid_argument("weight vector has more than 8 components");
        std::size_t pos = 0;
        try {
            w[i] = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("weight component is not a number: '" + tok + "'");
        }
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw std::invalid_argument("trailing characters in weight component: '" + tok + "'");
        ++i;
    }
    if (i != kNumPrimitives) throw std::invalid_argument("weight vector needs exactly 8 components");
    return w;
}

int dominant_primitive(const WeightVector& w) {
    int idx = 0;
    w.maxCoeff(&idx);
    return idx;
}

} // namespace tpms
