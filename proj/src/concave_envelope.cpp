#include "dmdp/concave_envelope.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmdp/error.hpp"

namespace dmdp {
namespace {

constexpr double kEps = 1e-11;

class Tableau {
public:
    // Rows 0..m-1 are constraints, row m the objective (reduced costs, maximization).
    Tableau(int m, int n) : t_(Matrix::Zero(m + 1, n + 1)), basis_(m, -1), m_(m), n_(n) {}

    double& at(int r, int c) { return t_(r, c); }
    double rhs(int r) const { return t_(r, n_); }
    int rows() const { return m_; }
    std::vector<int>& basis() { return basis_; }

    void pivot(int r, int c) {
        t_.row(r) /= t_(r, c);
        for (int i = 0; i <= m_; ++i)
            if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
        basis_[r] = c;
    }

    // Maximizes the objective row over columns [0, limit); false if unbounded.
    bool optimize(int limit) {
        while (true) {
            int enter = -1;
            for (int c = 0; c < limit; ++c)
                if (t_(m_, c) < -kEps) {
                    enter = c;
                    break;
                }
            if (enter < 0) return true;
            int leave = -1;
            double best = 0.0;
            for (int r = 0; r < m_; ++r) {
                if (t_(r, enter) <= kEps) continue;
                double ratio = t_(r, n_) / t_(r, enter);
                if (leave < 0 || ratio < best - kEps ||
                    (std::abs(ratio - best) <= kEps && basis_[r] < basis_[leave])) {
                    leave = r;
                    best = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }

    void set_objective(const Vector& cost) {
        t_.row(m_).setZero();
        for (int c = 0; c < cost.size(); ++c) t_(m_, c) = -cost(c);
        for (int r = 0; r < m_; ++r)
            if (basis_[r] >= 0 && t_(m_, basis_[r]) != 0.0) t_.row(m_) -= t_(m_, basis_[r]) * t_.row(r);
    }

    double objective() const { return t_(m_, n_); }

private:
    Matrix t_;
    std::vector<int> basis_;
    int m_, n_;
};

} // namespace

std::optional<double> lp_maximize(const Matrix& a, const Vector& b, const Vector& c) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    if (b.size() != m || c.size() != n) throw ValidationError("LP dimension mismatch");
    if ((b.array() < 0.0).any()) throw ValidationError("LP right-hand side must be nonnegative");
    // Columns: n originals, m artificials, then the right-hand side.
    Tableau t(m, n + m);
    for (int r = 0; r < m; ++r) {
        for (int col = 0; col < n; ++col) t.at(r, col) = a(r, col);
        t.at(r, n + r) = 1.0;
        t.at(r, n + m) = b(r);
        t.basis()[r] = n + r;
    }
    Vector phase1 = Vector::Zero(n + m);
    phase1.tail(m).setConstant(-1.0);
    t.set_objective(phase1);
    t.optimize(n + m);
    if (t.objective() < -1e-9) return std::nullopt;
    // Drive zero-level artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
        if (t.basis()[r] < n) continue;
        for (int col = 0; col < n; ++col)
            if (std::abs(t.at(r, col)) > 1e-9) {
                t.pivot(r, col);
                break;
            }
    }
    Vector phase2 = Vector::Zero(n + m);
    phase2.head(n) = c;
    t.set_objective(phase2);
    // Artificials still basic sit on redundant rows at level zero; keep them out of entry.
    if (!t.optimize(n)) throw NumericError("LP is unbounded");
    return t.objective();
}

std::vector<Extended> upper_concave_envelope(const std::vector<Vector>& points,
                                             const std::vector<Extended>& values) {
    const std::size_t k = points.size();
    if (values.size() != k) throw ValidationError("envelope points and values differ in length");
    std::vector<Extended> out(k);
    if (k == 0) return out;
    const Eigen::Index d = points.front().size();

    std::vector<std::size_t> finite;
    for (std::size_t i = 0; i < k; ++i)
        if (values[i]) finite.push_back(i);
    if (finite.empty()) return out;

    if (d == 1) {
        double best = *values[finite.front()];
        for (std::size_t i : finite) best = std::max(best, *values[i]);
        for (auto& v : out) v = best;
        return out;
    }

    if (d == 2) {
        // Upper hull over the first coordinate.
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i : finite) pts.emplace_back(points[i](0), *values[i]);
        std::sort(pts.begin(), pts.end());
        std::vector<std::pair<double, double>> hull;
        for (const auto& p : pts) {
            if (!hull.empty() && std::abs(hull.back().first - p.first) <= 1e-15) {
                hull.back().second = std::max(hull.back().second, p.second);
                continue;
            }
            while (hull.size() >= 2) {
                const auto& o = hull[hull.size() - 2];
                const auto& m = hull.back();
                double cross = (m.first - o.first) * (p.second - o.second) -
                               (m.second - o.second) * (p.first - o.first);
                if (cross >= 0.0) hull.pop_back();
                else break;
            }
            hull.push_back(p);
        }
        for (std::size_t i = 0; i < k; ++i) {
            double x = points[i](0);
            if (x < hull.front().first - 1e-12 || x > hull.back().first + 1e-12) continue;
            if (hull.size() == 1) {
                out[i] = hull.front().second;
                continue;
            }
            auto it = std::lower_bound(hull.begin(), hull.end(), x,
                                       [](const auto& h, double v) { return h.first < v; });
            if (it == hull.end()) it = std::prev(hull.end());
            if (it == hull.begin()) {
                out[i] = it->second;
                continue;
            }
            auto lo = std::prev(it);
            double t = (x - lo->first) / (it->first - lo->first);
            out[i] = lo->second + t * (it->second - lo->second);
        }
        return out;
    }

    Matrix a(d, static_cast<Eigen::Index>(finite.size()));
    Vector c(static_cast<Eigen::Index>(finite.size()));
    for (std::size_t j = 0; j < finite.size(); ++j) {
        a.col(static_cast<Eigen::Index>(j)) = points[finite[j]];
        c(static_cast<Eigen::Index>(j)) = *values[finite[j]];
    }
    for (std::size_t i = 0; i < k; ++i) {
        // Only points on the face spanned by x's support can represent x.
        std::vector<Eigen::Index> cols;
        for (std::size_t j = 0; j < finite.size(); ++j) {
            bool inside = true;
            for (Eigen::Index r = 0; r < d && inside; ++r)
                if (points[i](r) <= 0.0 && points[finite[j]](r) > 0.0) inside = false;
            if (inside) cols.push_back(static_cast<Eigen::Index>(j));
        }
        if (cols.empty()) continue;
        std::vector<Eigen::Index> rows;
        for (Eigen::Index r = 0; r < d; ++r)
            if (points[i](r) > 0.0) rows.push_back(r);
        Matrix sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        Vector cost(static_cast<Eigen::Index>(cols.size()));
        Vector rhs(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            rhs(static_cast<Eigen::Index>(r)) = points[i](rows[r]);
            for (std::size_t j = 0; j < cols.size(); ++j)
                sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = a(rows[r], cols[j]);
        }
        for (std::size_t j = 0; j < cols.size(); ++j) cost(static_cast<Eigen::Index>(j)) = c(cols[j]);
        auto v = lp_maximize(sub, rhs, cost);
        if (v) out[i] = values[i] ? std::max(*v, *values[i]) : *v;
    }
    return out;
}

} // namespace dmdp
