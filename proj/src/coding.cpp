#include "dmdp/coding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "dmdp/error.hpp"

namespace dmdp {

double entropy_bits(const Vector& dist) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < dist.size(); ++i) h += entropy_term(dist(i));
    return h;
}

double PrefixCode::expected_length(const Vector& dist) const {
    if (dist.size() != size()) throw ValidationError("distribution size does not match code");
    double e = 0.0;
    for (int i = 0; i < size(); ++i) e += dist(i) * length(i);
    return e;
}

double PrefixCode::kraft_sum() const {
    double k = 0.0;
    for (const auto& w : codewords) k += std::ldexp(1.0, -static_cast<int>(w.size()));
    return k;
}

bool PrefixCode::prefix_free() const {
    for (int i = 0; i < size(); ++i)
        for (int j = 0; j < size(); ++j)
            if (i != j && codewords[j].starts_with(codewords[i])) return false;
    return true;
}

PrefixCode huffman_code(const Vector& dist) {
    const int n = static_cast<int>(dist.size());
    if (n == 0) throw ValidationError("Huffman code of an empty distribution");
    if ((dist.array() < 0.0).any()) throw ValidationError("negative probability");
    PrefixCode code;
    code.codewords.assign(n, "");
    if (n == 1) return code;

    using Item = std::pair<double, int>;  // (probability, node id)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<int> parent(2 * n - 1, -1);
    for (int i = 0; i < n; ++i) heap.emplace(dist(i), i);
    int next = n;
    while (heap.size() > 1) {
        auto [pa, a] = heap.top();
        heap.pop();
        auto [pb, b] = heap.top();
        heap.pop();
        parent[a] = parent[b] = next;
        heap.emplace(pa + pb, next++);
    }
    std::vector<int> len(n, 0);
    for (int i = 0; i < n; ++i)
        for (int v = i; parent[v] >= 0; v = parent[v]) ++len[i];

    // Canonical assignment: shorter first, then lower symbol index.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return len[x] < len[y]; });
    unsigned long long value = 0;
    int prev = len[order[0]];
    for (std::size_t k = 0; k < order.size(); ++k) {
        int s = order[k];
        if (k > 0) value = (value + 1) << (len[s] - prev);
        prev = len[s];
        std::string w(len[s], '0');
        for (int bit = 0; bit < len[s]; ++bit)
            if (value >> (len[s] - 1 - bit) & 1ULL) w[bit] = '1';
        code.codewords[s] = std::move(w);
    }
    return code;
}

double huffman_expected_length(std::span<const double> dist) {
    if (dist.size() <= 1) return 0.0;
    std::priority_queue<double, std::vector<double>, std::greater<>> heap(dist.begin(), dist.end());
    double total = 0.0;
    while (heap.size() > 1) {
        double a = heap.top();
        heap.pop();
        double b = heap.top();
        heap.pop();
        total += a + b;
        heap.push(a + b);
    }
    return total;
}

const char* to_string(LengthModel m) { return m == LengthModel::huffman ? "huffman" : "entropy"; }

LengthModel length_model_from_string(const std::string& s) {
    if (s == "huffman") return LengthModel::huffman;
    if (s == "entropy") return LengthModel::entropy;
    throw ValidationError("unknown length model '" + s + "'");
}

} // namespace dmdp
