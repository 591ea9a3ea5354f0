#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dmdp/mdp.hpp"

namespace dmdp {

/// Shannon entropy in bits; zero-probability entries contribute nothing.
double entropy_bits(const Vector& dist);

/// -p log2 p, with the convention 0 log 0 = 0.
inline double entropy_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

struct PrefixCode {
    std::vector<std::string> codewords;  ///< over {'0','1'}, one per symbol

    int size() const { return static_cast<int>(codewords.size()); }
    int length(int symbol) const { return static_cast<int>(codewords[symbol].size()); }
    double expected_length(const Vector& dist) const;
    double kraft_sum() const;
    bool prefix_free() const;
};

/// Binary Huffman code. Merges the two lowest-probability nodes, breaking ties by lower
/// creation index (leaves first, in symbol order), then assigns canonical codewords.
/// A single symbol receives the empty codeword.
PrefixCode huffman_code(const Vector& dist);

/// Expected length of an optimal binary prefix code, without building codewords.
double huffman_expected_length(std::span<const double> dist);

enum class LengthModel { huffman, entropy };

const char* to_string(LengthModel m);
LengthModel length_model_from_string(const std::string& s);

} // namespace dmdp
