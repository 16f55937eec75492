#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here favors obviousness over speed: direct-summation
// transforms, exhaustive searches, explicit formula evaluation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <unistd.h>
#include <vector>

#include "pcgkit/classifiers.hpp"
#include "pcgkit/label.hpp"

namespace oracles {

// |X[k]|^2 / N for k = 0..N/2 by direct summation.
inline std::vector<double> dft_power(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<double> power(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) {
            const double angle = -2.0 * std::numbers::pi *
                                 static_cast<double>(k) * static_cast<double>(m) /
                                 static_cast<double>(n);
            acc += x[m] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        power[k] = std::norm(acc) / static_cast<double>(n);
    }
    return power;
}

// Full-length squared magnitudes, used for Parseval checks.
inline double dft_energy(std::span<const double> x) {
    const std::size_t n = x.size();
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) {
            const double angle = -2.0 * std::numbers::pi *
                                 static_cast<double>(k) * static_cast<double>(m) /
                                 static_cast<double>(n);
            acc += x[m] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        total += std::norm(acc);
    }
    return total;
}

// Unscaled DCT-II by the textbook double loop.
inline std::vector<double> dct_ii(std::span<const double> values) {
    const std::size_t m_count = values.size();
    std::vector<double> out(m_count, 0.0);
    for (std::size_t k = 0; k < m_count; ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            acc += values[m] * std::cos(std::numbers::pi /
                                        static_cast<double>(m_count) *
                                        (static_cast<double>(m) + 0.5) *
                                        static_cast<double>(k));
        }
        out[k] = acc;
    }
    return out;
}

// Exhaustive kNN over z-scored points; mirrors the documented tie and
// ordering rules (distance then insertion index, tie broken by the single
// nearest neighbor).
inline pcgkit::Label
brute_knn(std::size_t k, const std::vector<std::vector<double>>& points,
          const std::vector<pcgkit::Label>& labels, std::span<const double> query) {
    struct Entry {
        double dist2;
        std::size_t index;
    };
    std::vector<Entry> order(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) {
            const double diff = points[i][j] - query[j];
            acc += diff * diff;
        }
        order[i] = {acc, i};
    }
    std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
        if (a.dist2 != b.dist2) {
            return a.dist2 < b.dist2;
        }
        return a.index < b.index;
    });
    const std::size_t effective = std::min(k, points.size());
    std::size_t abnormal = 0;
    for (std::size_t i = 0; i < effective; ++i) {
        abnormal += labels[order[i].index] == pcgkit::Label::abnormal;
    }
    const std::size_t normal = effective - abnormal;
    if (abnormal == normal) {
        return labels[order.front().index];
    }
    return abnormal > normal ? pcgkit::Label::abnormal : pcgkit::Label::normal;
}

// Largest violation of the primal KKT conditions over the training set,
// recomputed from the stored dual variables and bias:
//   alpha_i = 0      requires  y_i f(x_i) >= 1
//   0 < alpha_i < C  requires  y_i f(x_i)  = 1
//   alpha_i = C      requires  y_i f(x_i) <= 1
// where f(x) = sum_j alpha_j y_j K(x_j, x) + b. Zero means fully optimal.
inline double svm_kkt_violation(const pcgkit::SvmModel& svm) {
    const std::size_t n = svm.points.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = svm.bias;
        for (std::size_t j = 0; j < n; ++j) {
            if (svm.alpha[j] == 0.0) {
                continue;
            }
            f += svm.alpha[j] * svm.y[j] *
                 pcgkit::kernel_eval(svm.kernel, svm.points[j], svm.points[i],
                                     svm.gamma, svm.degree);
        }
        const double margin = svm.y[i] * f;
        const double bound_slack = 1e-9 * svm.c;
        double violation = 0.0;
        if (svm.alpha[i] <= bound_slack) {
            violation = std::max(0.0, 1.0 - margin);
        } else if (svm.alpha[i] >= svm.c - bound_slack) {
            violation = std::max(0.0, margin - 1.0);
        } else {
            violation = std::abs(margin - 1.0);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

inline double gini(std::size_t abnormal, std::size_t normal) {
    const double total = static_cast<double>(abnormal + normal);
    if (total == 0.0) {
        return 0.0;
    }
    const double pa = static_cast<double>(abnormal) / total;
    const double pn = static_cast<double>(normal) / total;
    return 1.0 - pa * pa - pn * pn;
}

// Routes the training set down a fitted tree and confirms no split increases
// weighted Gini impurity. Returns the number of internal nodes audited.
inline std::size_t
audit_tree_gini(const pcgkit::DtModel& tree,
                const std::vector<std::vector<double>>& points,
                const std::vector<pcgkit::Label>& labels, double tolerance = 1e-12) {
    struct Work {
        std::int32_t node;
        std::vector<std::size_t> members;
    };
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    std::vector<Work> stack{{0, std::move(all)}};
    std::size_t audited = 0;
    while (!stack.empty()) {
        Work work = std::move(stack.back());
        stack.pop_back();
        const pcgkit::DtNode& node = tree.nodes.at(static_cast<std::size_t>(work.node));
        if (node.leaf) {
            continue;
        }
        std::vector<std::size_t> left, right;
        std::size_t la = 0, ln = 0, ra = 0, rn = 0;
        for (std::size_t idx : work.members) {
            const bool goes_left = points[idx][node.feature] <= node.threshold;
            auto& side = goes_left ? left : right;
            side.push_back(idx);
            if (labels[idx] == pcgkit::Label::abnormal) {
                (goes_left ? la : ra) += 1;
            } else {
                (goes_left ? ln : rn) += 1;
            }
        }
        const double parent = gini(la + ra, ln + rn);
        const double total = static_cast<double>(work.members.size());
        const double weighted =
            gini(la, ln) * (static_cast<double>(left.size()) / total) +
            gini(ra, rn) * (static_cast<double>(right.size()) / total);
        if (weighted > parent + tolerance) {
            return static_cast<std::size_t>(-1);
        }
        ++audited;
        stack.push_back({node.left, std::move(left)});
        stack.push_back({node.right, std::move(right)});
    }
    return audited;
}

// Scratch directory removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    TempDir(TempDir&& other) noexcept { std::swap(path_, other.path_); }
    TempDir& operator=(TempDir&&) = delete;

    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

} // namespace oracles
