#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ewhbench {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimization LP in triplet form. Row senses are encoded by the row bound
// pair: (-inf, b] is <=, [b, inf) is >=, [b, b] is an equality. Every column
// and every row must have at least one finite bound.
struct SparseLp {
    int num_cols = 0;
    int num_rows = 0;
    std::vector<double> objective;
    std::vector<double> col_lower, col_upper;
    std::vector<double> row_lower, row_upper;
    std::vector<int> entry_row, entry_col;
    std::vector<double> entry_value;

    void add_entry(int row, int col, double value) {
        if (value == 0.0) return;
        entry_row.push_back(row);
        entry_col.push_back(col);
        entry_value.push_back(value);
    }
};

inline void validate(const SparseLp& lp) {
    if (lp.num_cols < 1 || lp.num_rows < 0)
        throw std::invalid_argument("SparseLp: bad dimensions");
    if (static_cast<int>(lp.objective.size()) != lp.num_cols ||
        static_cast<int>(lp.col_lower.size()) != lp.num_cols ||
        static_cast<int>(lp.col_upper.size()) != lp.num_cols ||
        static_cast<int>(lp.row_lower.size()) != lp.num_rows ||
        static_cast<int>(lp.row_upper.size()) != lp.num_rows)
        throw std::invalid_argument("SparseLp: inconsistent array sizes");
    if (lp.entry_row.size() != lp.entry_col.size() ||
        lp.entry_row.size() != lp.entry_value.size())
        throw std::invalid_argument("SparseLp: inconsistent triplets");
    for (std::size_t i = 0; i < lp.entry_row.size(); ++i) {
        if (lp.entry_row[i] < 0 || lp.entry_row[i] >= lp.num_rows ||
            lp.entry_col[i] < 0 || lp.entry_col[i] >= lp.num_cols)
            throw std::invalid_argument("SparseLp: entry out of range");
        if (!std::isfinite(lp.entry_value[i]))
            throw std::invalid_argument("SparseLp: non-finite coefficient");
    }
    for (int j = 0; j < lp.num_cols; ++j) {
        if (!std::isfinite(lp.objective[static_cast<std::size_t>(j)]))
            throw std::invalid_argument("SparseLp: non-finite objective");
        if (!(lp.col_lower[static_cast<std::size_t>(j)] <=
              lp.col_upper[static_cast<std::size_t>(j)]))
            throw std::invalid_argument("SparseLp: crossed column bounds");
        if (!std::isfinite(lp.col_lower[static_cast<std::size_t>(j)]) &&
            !std::isfinite(lp.col_upper[static_cast<std::size_t>(j)]))
            throw std::invalid_argument("SparseLp: free columns are not supported");
    }
    for (int i = 0; i < lp.num_rows; ++i) {
        if (!(lp.row_lower[static_cast<std::size_t>(i)] <=
              lp.row_upper[static_cast<std::size_t>(i)]))
            throw std::invalid_argument("SparseLp: crossed row bounds");
        if (!std::isfinite(lp.row_lower[static_cast<std::size_t>(i)]) &&
            !std::isfinite(lp.row_upper[static_cast<std::size_t>(i)]))
            throw std::invalid_argument("SparseLp: free rows are not supported");
    }
}

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        default: return "iteration_limit";
    }
}

struct LpSolution {
    LpStatus status = LpStatus::iteration_limit;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> row_activity;
    std::vector<double> dual;
    std::vector<double> reduced_cost;
    long iterations = 0;
    double max_primal_residual = 0.0;
    double max_dual_residual = 0.0;
};

struct SimplexOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    double pivot_tol = 1e-9;
    long max_iterations = 0;   // 0: derived from problem size
    long bland_after = 0;      // 0: 10 * (rows + cols)
    int refactor_every = 64;
};

// Optional starting basis. `basic` holds one column per row slot; indices
// >= num_cols denote the logical column of row (index - num_cols). Nonbasic
// columns sit at their lower bound unless flagged in at_upper (length
// num_cols + num_rows).
struct BasisHint {
    std::vector<int> basic;
    std::vector<std::uint8_t> at_upper;
};

namespace lpdetail {

struct Csc {
    int cols = 0, rows = 0;
    std::vector<int> start;
    std::vector<int> index;
    std::vector<double> value;
};

inline Csc to_csc(const SparseLp& lp) {
    Csc a;
    a.cols = lp.num_cols;
    a.rows = lp.num_rows;
    a.start.assign(static_cast<std::size_t>(lp.num_cols) + 1, 0);
    for (int c : lp.entry_col) ++a.start[static_cast<std::size_t>(c) + 1];
    for (int j = 0; j < lp.num_cols; ++j)
        a.start[static_cast<std::size_t>(j) + 1] += a.start[static_cast<std::size_t>(j)];
    a.index.resize(lp.entry_row.size());
    a.value.resize(lp.entry_row.size());
    std::vector<int> fill(a.start.begin(), a.start.end() - 1);
    for (std::size_t i = 0; i < lp.entry_row.size(); ++i) {
        const int j = lp.entry_col[i];
        const int at = fill[static_cast<std::size_t>(j)]++;
        a.index[static_cast<std::size_t>(at)] = lp.entry_row[i];
        a.value[static_cast<std::size_t>(at)] = lp.entry_value[i];
    }
    return a;
}

// LU of the basis via triangular stripping plus a dense bump. Row
// singletons peel off the front, column singletons peel off the back, and
// whatever coupling remains is factorized densely with partial pivoting.
//
// Orderings that make the solves exact:
//  - a column pivoted later has no entry in any earlier-pivoted front row
//    (that row had a single active column at discovery);
//  - a back column touches only its own pivot row and earlier-discovered
//    back rows (it had a single active row at discovery);
//  - bump columns touch bump rows and back rows, never front rows.
class BasisLu {
  public:
    struct Unpivoted {
        int row;
        int slot;
    };

    // Returns false when the basis is numerically singular; `unpivoted` then
    // pairs each pivotless row with the basis slot left without a pivot.
    bool factorize(const Csc& a, int num_struct, const std::vector<int>& basic,
                   std::vector<Unpivoted>& unpivoted) {
        m_ = static_cast<int>(basic.size());
        col_start_.assign(static_cast<std::size_t>(m_) + 1, 0);
        col_row_.clear();
        col_val_.clear();
        for (int s = 0; s < m_; ++s) {
            const int j = basic[static_cast<std::size_t>(s)];
            if (j < num_struct) {
                for (int t = a.start[static_cast<std::size_t>(j)];
                     t < a.start[static_cast<std::size_t>(j) + 1]; ++t) {
                    col_row_.push_back(a.index[static_cast<std::size_t>(t)]);
                    col_val_.push_back(a.value[static_cast<std::size_t>(t)]);
                }
            } else {
                col_row_.push_back(j - num_struct);
                col_val_.push_back(-1.0);
            }
            col_start_[static_cast<std::size_t>(s) + 1] = static_cast<int>(col_row_.size());
        }

        std::vector<int> row_start(static_cast<std::size_t>(m_) + 1, 0);
        std::vector<int> row_slot(col_row_.size());
        for (int r : col_row_) ++row_start[static_cast<std::size_t>(r) + 1];
        for (int i = 0; i < m_; ++i)
            row_start[static_cast<std::size_t>(i) + 1] += row_start[static_cast<std::size_t>(i)];
        {
            std::vector<int> fill(row_start.begin(), row_start.end() - 1);
            for (int s = 0; s < m_; ++s)
                for (int t = col_start_[static_cast<std::size_t>(s)];
                     t < col_start_[static_cast<std::size_t>(s) + 1]; ++t)
                    row_slot[static_cast<std::size_t>(
                        fill[static_cast<std::size_t>(col_row_[static_cast<std::size_t>(t)])]++)] =
                        s;
        }

        std::vector<int> row_count(static_cast<std::size_t>(m_), 0);
        std::vector<int> col_count(static_cast<std::size_t>(m_), 0);
        std::vector<char> row_active(static_cast<std::size_t>(m_), 1);
        std::vector<char> col_active(static_cast<std::size_t>(m_), 1);
        for (int i = 0; i < m_; ++i)
            row_count[static_cast<std::size_t>(i)] =
                row_start[static_cast<std::size_t>(i) + 1] - row_start[static_cast<std::size_t>(i)];
        for (int s = 0; s < m_; ++s)
            col_count[static_cast<std::size_t>(s)] =
                col_start_[static_cast<std::size_t>(s) + 1] - col_start_[static_cast<std::size_t>(s)];

        front_.clear();
        back_.clear();
        std::vector<int> row_queue, col_queue;
        row_queue.reserve(static_cast<std::size_t>(m_));
        col_queue.reserve(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i)
            if (row_count[static_cast<std::size_t>(i)] == 1) row_queue.push_back(i);
        for (int s = 0; s < m_; ++s)
            if (col_count[static_cast<std::size_t>(s)] == 1) col_queue.push_back(s);

        const auto retire_row = [&](int r) {
            row_active[static_cast<std::size_t>(r)] = 0;
            for (int t = row_start[static_cast<std::size_t>(r)];
                 t < row_start[static_cast<std::size_t>(r) + 1]; ++t) {
                const int s2 = row_slot[static_cast<std::size_t>(t)];
                if (col_active[static_cast<std::size_t>(s2)] &&
                    --col_count[static_cast<std::size_t>(s2)] == 1)
                    col_queue.push_back(s2);
            }
        };
        const auto retire_col = [&](int s) {
            col_active[static_cast<std::size_t>(s)] = 0;
            for (int t = col_start_[static_cast<std::size_t>(s)];
                 t < col_start_[static_cast<std::size_t>(s) + 1]; ++t) {
                const int r2 = col_row_[static_cast<std::size_t>(t)];
                if (row_active[static_cast<std::size_t>(r2)] &&
                    --row_count[static_cast<std::size_t>(r2)] == 1)
                    row_queue.push_back(r2);
            }
        };

        std::size_t rq = 0, cq = 0;
        while (rq < row_queue.size() || cq < col_queue.size()) {
            if (rq < row_queue.size()) {
                const int r = row_queue[rq++];
                if (!row_active[static_cast<std::size_t>(r)] ||
                    row_count[static_cast<std::size_t>(r)] != 1)
                    continue;
                int slot = -1;
                double val = 0.0;
                for (int t = row_start[static_cast<std::size_t>(r)];
                     t < row_start[static_cast<std::size_t>(r) + 1]; ++t) {
                    const int s = row_slot[static_cast<std::size_t>(t)];
                    if (!col_active[static_cast<std::size_t>(s)]) continue;
                    for (int u = col_start_[static_cast<std::size_t>(s)];
                         u < col_start_[static_cast<std::size_t>(s) + 1]; ++u)
                        if (col_row_[static_cast<std::size_t>(u)] == r) {
                            slot = s;
                            val = col_val_[static_cast<std::size_t>(u)];
                        }
                }
                if (slot < 0 || std::abs(val) < kSingularTol) continue;
                front_.push_back({r, slot, val});
                retire_row(r);
                retire_col(slot);
            } else {
                const int s = col_queue[cq++];
                if (!col_active[static_cast<std::size_t>(s)] ||
                    col_count[static_cast<std::size_t>(s)] != 1)
                    continue;
                int row = -1;
                double val = 0.0;
                for (int t = col_start_[static_cast<std::size_t>(s)];
                     t < col_start_[static_cast<std::size_t>(s) + 1]; ++t) {
                    const int r = col_row_[static_cast<std::size_t>(t)];
                    if (row_active[static_cast<std::size_t>(r)]) {
                        row = r;
                        val = col_val_[static_cast<std::size_t>(t)];
                    }
                }
                if (row < 0 || std::abs(val) < kSingularTol) continue;
                back_.push_back({row, s, val});
                retire_col(s);
                retire_row(row);
            }
        }

        bump_rows_.clear();
        bump_slots_.clear();
        for (int i = 0; i < m_; ++i)
            if (row_active[static_cast<std::size_t>(i)]) bump_rows_.push_back(i);
        for (int s = 0; s < m_; ++s)
            if (col_active[static_cast<std::size_t>(s)]) bump_slots_.push_back(s);
        bump_n_ = static_cast<int>(bump_rows_.size());
        if (bump_n_ != static_cast<int>(bump_slots_.size()))
            throw std::logic_error("BasisLu: bump is not square");

        if (bump_n_ > 0) {
            const int nb = bump_n_;
            std::vector<int> row_pos(static_cast<std::size_t>(m_), -1);
            for (int i = 0; i < nb; ++i)
                row_pos[static_cast<std::size_t>(bump_rows_[static_cast<std::size_t>(i)])] = i;
            bump_lu_.assign(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb), 0.0);
            for (int jc = 0; jc < nb; ++jc) {
                const int s = bump_slots_[static_cast<std::size_t>(jc)];
                for (int t = col_start_[static_cast<std::size_t>(s)];
                     t < col_start_[static_cast<std::size_t>(s) + 1]; ++t) {
                    const int pos = row_pos[static_cast<std::size_t>(
                        col_row_[static_cast<std::size_t>(t)])];
                    if (pos >= 0)
                        bump_lu_[static_cast<std::size_t>(pos) * nb + jc] =
                            col_val_[static_cast<std::size_t>(t)];
                }
            }
            bump_perm_.resize(static_cast<std::size_t>(nb));
            for (int i = 0; i < nb; ++i) bump_perm_[static_cast<std::size_t>(i)] = i;
            for (int k = 0; k < nb; ++k) {
                int piv = k;
                double best = std::abs(bump_lu_[static_cast<std::size_t>(k) * nb + k]);
                for (int i = k + 1; i < nb; ++i) {
                    const double v = std::abs(bump_lu_[static_cast<std::size_t>(i) * nb + k]);
                    if (v > best) {
                        best = v;
                        piv = i;
                    }
                }
                if (best < kSingularTol) {
                    unpivoted.clear();
                    for (int i = k; i < nb; ++i)
                        unpivoted.push_back(
                            {bump_rows_[static_cast<std::size_t>(
                                 bump_perm_[static_cast<std::size_t>(i)])],
                             bump_slots_[static_cast<std::size_t>(i)]});
                    return false;
                }
                if (piv != k) {
                    for (int j = 0; j < nb; ++j)
                        std::swap(bump_lu_[static_cast<std::size_t>(piv) * nb + j],
                                  bump_lu_[static_cast<std::size_t>(k) * nb + j]);
                    std::swap(bump_perm_[static_cast<std::size_t>(piv)],
                              bump_perm_[static_cast<std::size_t>(k)]);
                }
                const double d = bump_lu_[static_cast<std::size_t>(k) * nb + k];
                for (int i = k + 1; i < nb; ++i) {
                    const double l = bump_lu_[static_cast<std::size_t>(i) * nb + k] / d;
                    bump_lu_[static_cast<std::size_t>(i) * nb + k] = l;
                    if (l != 0.0)
                        for (int j = k + 1; j < nb; ++j)
                            bump_lu_[static_cast<std::size_t>(i) * nb + j] -=
                                l * bump_lu_[static_cast<std::size_t>(k) * nb + j];
                }
            }
        }
        return true;
    }

    int size() const { return m_; }
    int bump_size() const { return bump_n_; }

    // Solve B x = v in place; v enters indexed by row, leaves indexed by
    // basis slot. Push form: each solved component is substituted forward
    // into the rows its column touches.
    void ftran(std::vector<double>& v) const {
        work_.assign(static_cast<std::size_t>(m_), 0.0);
        for (const Pivot& p : front_) {
            const double xv = v[static_cast<std::size_t>(p.row)] / p.value;
            work_[static_cast<std::size_t>(p.slot)] = xv;
            if (xv != 0.0) push_column(p.slot, p.row, xv, v);
        }
        if (bump_n_ > 0) {
            const int nb = bump_n_;
            bump_rhs_.resize(static_cast<std::size_t>(nb));
            for (int i = 0; i < nb; ++i)
                bump_rhs_[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(
                    bump_rows_[static_cast<std::size_t>(bump_perm_[static_cast<std::size_t>(i)])])];
            for (int k = 0; k < nb; ++k)
                for (int i = k + 1; i < nb; ++i)
                    bump_rhs_[static_cast<std::size_t>(i)] -=
                        bump_lu_[static_cast<std::size_t>(i) * nb + k] *
                        bump_rhs_[static_cast<std::size_t>(k)];
            for (int k = nb - 1; k >= 0; --k) {
                for (int j = k + 1; j < nb; ++j)
                    bump_rhs_[static_cast<std::size_t>(k)] -=
                        bump_lu_[static_cast<std::size_t>(k) * nb + j] *
                        bump_rhs_[static_cast<std::size_t>(j)];
                bump_rhs_[static_cast<std::size_t>(k)] /=
                    bump_lu_[static_cast<std::size_t>(k) * nb + k];
            }
            for (int j = 0; j < nb; ++j) {
                const int slot = bump_slots_[static_cast<std::size_t>(j)];
                const double xv = bump_rhs_[static_cast<std::size_t>(j)];
                work_[static_cast<std::size_t>(slot)] = xv;
                if (xv != 0.0) push_column(slot, -1, xv, v);
            }
        }
        for (auto it = back_.rbegin(); it != back_.rend(); ++it) {
            const double xv = v[static_cast<std::size_t>(it->row)] / it->value;
            work_[static_cast<std::size_t>(it->slot)] = xv;
            if (xv != 0.0) push_column(it->slot, it->row, xv, v);
        }
        v.swap(work_);
    }

    // Solve B' y = v in place; v enters indexed by basis slot, leaves
    // indexed by row. Gather form: each pivot's equation reads the already
    // solved rows of its own column, so v itself is never mutated.
    void btran(std::vector<double>& v) const {
        work_.assign(static_cast<std::size_t>(m_), 0.0);
        for (const Pivot& p : back_)
            work_[static_cast<std::size_t>(p.row)] = gather(p, v);
        if (bump_n_ > 0) {
            const int nb = bump_n_;
            bump_rhs_.resize(static_cast<std::size_t>(nb));
            for (int j = 0; j < nb; ++j) {
                const int s = bump_slots_[static_cast<std::size_t>(j)];
                double acc = v[static_cast<std::size_t>(s)];
                for (int t = col_start_[static_cast<std::size_t>(s)];
                     t < col_start_[static_cast<std::size_t>(s) + 1]; ++t) {
                    const int r = col_row_[static_cast<std::size_t>(t)];
                    if (!is_bump_row(r))
                        acc -= col_val_[static_cast<std::size_t>(t)] *
                               work_[static_cast<std::size_t>(r)];
                }
                bump_rhs_[static_cast<std::size_t>(j)] = acc;
            }
            // (P M) = L U, so M' y = c solves as U' z = c, L' w = z, y = P' w.
            for (int k = 0; k < nb; ++k) {
                for (int i = 0; i < k; ++i)
                    bump_rhs_[static_cast<std::size_t>(k)] -=
                        bump_lu_[static_cast<std::size_t>(i) * nb + k] *
                        bump_rhs_[static_cast<std::size_t>(i)];
                bump_rhs_[static_cast<std::size_t>(k)] /=
                    bump_lu_[static_cast<std::size_t>(k) * nb + k];
            }
            for (int k = nb - 1; k >= 0; --k)
                for (int i = k + 1; i < nb; ++i)
                    bump_rhs_[static_cast<std::size_t>(k)] -=
                        bump_lu_[static_cast<std::size_t>(i) * nb + k] *
                        bump_rhs_[static_cast<std::size_t>(i)];
            for (int i = 0; i < nb; ++i)
                work_[static_cast<std::size_t>(bump_rows_[static_cast<std::size_t>(
                    bump_perm_[static_cast<std::size_t>(i)])])] =
                    bump_rhs_[static_cast<std::size_t>(i)];
        }
        for (auto it = front_.rbegin(); it != front_.rend(); ++it)
            work_[static_cast<std::size_t>(it->row)] = gather(*it, v);
        v.swap(work_);
    }

  private:
    struct Pivot {
        int row;
        int slot;
        double value;
    };
    static constexpr double kSingularTol = 1e-11;

    bool is_bump_row(int r) const {
        return std::binary_search(bump_rows_.begin(), bump_rows_.end(), r);
    }

    void push_column(int slot, int skip_row, double xv, std::vector<double>& v) const {
        for (int t = col_start_[static_cast<std::size_t>(slot)];
             t < col_start_[static_cast<std::size_t>(slot) + 1]; ++t) {
            const int r2 = col_row_[static_cast<std::size_t>(t)];
            if (r2 != skip_row)
                v[static_cast<std::size_t>(r2)] -= col_val_[static_cast<std::size_t>(t)] * xv;
        }
    }

    double gather(const Pivot& p, const std::vector<double>& v) const {
        double acc = v[static_cast<std::size_t>(p.slot)];
        for (int t = col_start_[static_cast<std::size_t>(p.slot)];
             t < col_start_[static_cast<std::size_t>(p.slot) + 1]; ++t) {
            const int r = col_row_[static_cast<std::size_t>(t)];
            if (r != p.row)
                acc -= col_val_[static_cast<std::size_t>(t)] * work_[static_cast<std::size_t>(r)];
        }
        return acc / p.value;
    }

    int m_ = 0;
    std::vector<int> col_start_, col_row_;
    std::vector<double> col_val_;
    std::vector<Pivot> front_, back_;
    std::vector<int> bump_rows_, bump_slots_, bump_perm_;
    std::vector<double> bump_lu_;
    int bump_n_ = 0;
    mutable std::vector<double> work_, bump_rhs_;
};

enum class VarState : std::uint8_t { basic, at_lower, at_upper };

// Bounded-variable primal simplex over [A | -I][x; s] = 0 with bounds on
// structural and logical columns alike. Dantzig pricing with a Bland
// fallback against cycling; product-form eta updates between
// refactorizations; a composite phase 1 that drives out-of-bound basics
// toward their violated bound without artificial columns.
class Simplex {
  public:
    Simplex(const SparseLp& lp, const SimplexOptions& opt) : opt_(opt) {
        n_ = lp.num_cols;
        m_ = lp.num_rows;
        total_ = n_ + m_;
        a_ = to_csc(lp);
        lower_.resize(static_cast<std::size_t>(total_));
        upper_.resize(static_cast<std::size_t>(total_));
        cost_.assign(static_cast<std::size_t>(total_), 0.0);
        for (int j = 0; j < n_; ++j) {
            lower_[static_cast<std::size_t>(j)] = lp.col_lower[static_cast<std::size_t>(j)];
            upper_[static_cast<std::size_t>(j)] = lp.col_upper[static_cast<std::size_t>(j)];
            cost_[static_cast<std::size_t>(j)] = lp.objective[static_cast<std::size_t>(j)];
        }
        for (int i = 0; i < m_; ++i) {
            lower_[static_cast<std::size_t>(n_ + i)] = lp.row_lower[static_cast<std::size_t>(i)];
            upper_[static_cast<std::size_t>(n_ + i)] = lp.row_upper[static_cast<std::size_t>(i)];
        }
        if (opt_.max_iterations <= 0)
            opt_.max_iterations = std::max(20000L, 200L * (m_ + n_));
        if (opt_.bland_after <= 0) opt_.bland_after = 10L * (m_ + n_);
    }

    LpSolution run(const BasisHint* hint) {
        init_basis(hint);
        LpSolution sol;
        if (!phase1()) {
            sol.status = iterations_ >= opt_.max_iterations ? LpStatus::iteration_limit
                                                            : LpStatus::infeasible;
        } else {
            sol.status = phase2();
        }
        fill_solution(sol);
        return sol;
    }

  private:
    double bound_start(int j) const {
        return std::isfinite(lower_[static_cast<std::size_t>(j)])
                   ? lower_[static_cast<std::size_t>(j)]
                   : upper_[static_cast<std::size_t>(j)];
    }

    void init_basis(const BasisHint* hint) {
        state_.assign(static_cast<std::size_t>(total_), VarState::at_lower);
        value_.assign(static_cast<std::size_t>(total_), 0.0);
        basic_.assign(static_cast<std::size_t>(m_), -1);

        bool used_hint = false;
        if (hint && static_cast<int>(hint->basic.size()) == m_ &&
            static_cast<int>(hint->at_upper.size()) == total_) {
            std::vector<char> seen(static_cast<std::size_t>(total_), 0);
            bool ok = true;
            for (int j : hint->basic)
                if (j < 0 || j >= total_ || seen[static_cast<std::size_t>(j)]++) ok = false;
            if (ok) {
                basic_ = hint->basic;
                for (int j : basic_) state_[static_cast<std::size_t>(j)] = VarState::basic;
                for (int j = 0; j < total_; ++j) {
                    if (state_[static_cast<std::size_t>(j)] == VarState::basic) continue;
                    if (hint->at_upper[static_cast<std::size_t>(j)] &&
                        std::isfinite(upper_[static_cast<std::size_t>(j)]))
                        state_[static_cast<std::size_t>(j)] = VarState::at_upper;
                }
                used_hint = true;
            }
        }
        if (!used_hint) {
            for (int i = 0; i < m_; ++i) {
                basic_[static_cast<std::size_t>(i)] = n_ + i;
                state_[static_cast<std::size_t>(n_ + i)] = VarState::basic;
            }
        }
        for (int j = 0; j < total_; ++j) {
            if (state_[static_cast<std::size_t>(j)] == VarState::basic) continue;
            if (state_[static_cast<std::size_t>(j)] == VarState::at_lower &&
                !std::isfinite(lower_[static_cast<std::size_t>(j)]))
                state_[static_cast<std::size_t>(j)] = VarState::at_upper;
            value_[static_cast<std::size_t>(j)] =
                state_[static_cast<std::size_t>(j)] == VarState::at_upper
                    ? upper_[static_cast<std::size_t>(j)]
                    : bound_start(j);
        }
        iterations_ = 0;
        if (!refactorize()) repair_and_refactorize();
        compute_basic_values();
    }

    bool refactorize() {
        if (lu_.factorize(a_, n_, basic_, last_unpivoted_)) {
            etas_.clear();
            pivots_since_factor_ = 0;
            return true;
        }
        return false;
    }

    // A numerically dependent basic column in an unpivoted slot is swapped
    // for the logical of the matching unpivoted row. A row left without a
    // pivot cannot already have its logical basic, so the swap is safe.
    void repair_and_refactorize() {
        for (int attempt = 0; attempt <= m_; ++attempt) {
            for (const BasisLu::Unpivoted& u : last_unpivoted_) {
                const int old = basic_[static_cast<std::size_t>(u.slot)];
                set_nonbasic_at_nearest(old);
                basic_[static_cast<std::size_t>(u.slot)] = n_ + u.row;
                state_[static_cast<std::size_t>(n_ + u.row)] = VarState::basic;
            }
            if (refactorize()) return;
        }
        throw std::runtime_error("simplex: basis repair did not converge");
    }

    void set_nonbasic_at_nearest(int j) {
        const double v = value_[static_cast<std::size_t>(j)];
        const double lo = lower_[static_cast<std::size_t>(j)];
        const double hi = upper_[static_cast<std::size_t>(j)];
        if (std::isfinite(lo) && (!std::isfinite(hi) || std::abs(v - lo) <= std::abs(v - hi))) {
            state_[static_cast<std::size_t>(j)] = VarState::at_lower;
            value_[static_cast<std::size_t>(j)] = lo;
        } else {
            state_[static_cast<std::size_t>(j)] = VarState::at_upper;
            value_[static_cast<std::size_t>(j)] = hi;
        }
    }

    // Column j of [A | -I] accumulated into a dense row-indexed vector.
    void add_column(int j, double scale, std::vector<double>& dense) const {
        if (j < n_) {
            for (int t = a_.start[static_cast<std::size_t>(j)];
                 t < a_.start[static_cast<std::size_t>(j) + 1]; ++t)
                dense[static_cast<std::size_t>(a_.index[static_cast<std::size_t>(t)])] +=
                    scale * a_.value[static_cast<std::size_t>(t)];
        } else {
            dense[static_cast<std::size_t>(j - n_)] -= scale;
        }
    }

    double dot_column(int j, const std::vector<double>& y) const {
        if (j >= n_) return -y[static_cast<std::size_t>(j - n_)];
        double acc = 0.0;
        for (int t = a_.start[static_cast<std::size_t>(j)];
             t < a_.start[static_cast<std::size_t>(j) + 1]; ++t)
            acc += a_.value[static_cast<std::size_t>(t)] *
                   y[static_cast<std::size_t>(a_.index[static_cast<std::size_t>(t)])];
        return acc;
    }

    void ftran(std::vector<double>& v) const {
        lu_.ftran(v);
        for (const Eta& e : etas_) {
            const double t = v[static_cast<std::size_t>(e.slot)] / e.pivot;
            if (t != 0.0)
                for (std::size_t k = 0; k < e.index.size(); ++k)
                    v[static_cast<std::size_t>(e.index[k])] -= e.value[k] * t;
            v[static_cast<std::size_t>(e.slot)] = t;
        }
    }

    void btran(std::vector<double>& v) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double acc = v[static_cast<std::size_t>(it->slot)];
            for (std::size_t k = 0; k < it->index.size(); ++k)
                acc -= it->value[k] * v[static_cast<std::size_t>(it->index[k])];
            v[static_cast<std::size_t>(it->slot)] = acc / it->pivot;
        }
        lu_.btran(v);
    }

    void compute_basic_values() {
        std::vector<double> rhs(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < total_; ++j) {
            if (state_[static_cast<std::size_t>(j)] == VarState::basic) continue;
            const double v = value_[static_cast<std::size_t>(j)];
            if (v != 0.0) add_column(j, -v, rhs);
        }
        ftran(rhs);
        for (int s = 0; s < m_; ++s)
            value_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(s)])] =
                rhs[static_cast<std::size_t>(s)];
    }

    double max_infeasibility() const {
        double worst = 0.0;
        for (int s = 0; s < m_; ++s) {
            const int j = basic_[static_cast<std::size_t>(s)];
            const double v = value_[static_cast<std::size_t>(j)];
            worst = std::max(worst, lower_[static_cast<std::size_t>(j)] - v);
            worst = std::max(worst, v - upper_[static_cast<std::size_t>(j)]);
        }
        return worst;
    }

    // Phase gradient: real costs in phase 2; unit pushes on violated basics
    // in phase 1 (minimizing total bound violation).
    void phase_costs(bool phase_one, std::vector<double>& c) const {
        if (!phase_one) {
            c = cost_;
            return;
        }
        c.assign(static_cast<std::size_t>(total_), 0.0);
        for (int s = 0; s < m_; ++s) {
            const int j = basic_[static_cast<std::size_t>(s)];
            const double v = value_[static_cast<std::size_t>(j)];
            if (v < lower_[static_cast<std::size_t>(j)] - opt_.feas_tol)
                c[static_cast<std::size_t>(j)] = -1.0;
            else if (v > upper_[static_cast<std::size_t>(j)] + opt_.feas_tol)
                c[static_cast<std::size_t>(j)] = 1.0;
        }
    }

    bool phase1() {
        if (max_infeasibility() <= opt_.feas_tol) return true;
        (void)iterate(true);
        return max_infeasibility() <= opt_.feas_tol;
    }

    LpStatus phase2() { return iterate(false); }

    LpStatus iterate(bool phase_one) {
        std::vector<double> c, y, w;
        // phase 2 costs are the fixed objective; phase 1 costs track the
        // violated basics and change with every pivot
        if (!phase_one) phase_costs(false, c);
        while (iterations_ < opt_.max_iterations) {
            if (phase_one) phase_costs(true, c);
            y.assign(static_cast<std::size_t>(m_), 0.0);
            for (int s = 0; s < m_; ++s)
                y[static_cast<std::size_t>(s)] =
                    c[static_cast<std::size_t>(basic_[static_cast<std::size_t>(s)])];
            btran(y);

            const bool bland = iterations_ >= opt_.bland_after;
            int entering = -1;
            int enter_dir = 0;
            double best_violation = opt_.opt_tol;
            for (int j = 0; j < total_; ++j) {
                const VarState st = state_[static_cast<std::size_t>(j)];
                if (st == VarState::basic) continue;
                if (lower_[static_cast<std::size_t>(j)] == upper_[static_cast<std::size_t>(j)])
                    continue;
                const double d = c[static_cast<std::size_t>(j)] - dot_column(j, y);
                int dir = 0;
                double violation = 0.0;
                if (st == VarState::at_lower && d < -opt_.opt_tol) {
                    dir = +1;
                    violation = -d;
                } else if (st == VarState::at_upper && d > opt_.opt_tol) {
                    dir = -1;
                    violation = d;
                }
                if (dir == 0) continue;
                if (bland) {
                    entering = j;
                    enter_dir = dir;
                    break;
                }
                if (violation > best_violation) {
                    best_violation = violation;
                    entering = j;
                    enter_dir = dir;
                }
            }
            if (entering < 0) return LpStatus::optimal;

            w.assign(static_cast<std::size_t>(m_), 0.0);
            add_column(entering, 1.0, w);
            ftran(w);

            // Ratio test: x_B moves by -dir*t*w as the entering column
            // travels t from its bound. A feasible basic blocks at the bound
            // it approaches; in phase 1 a violated basic blocks at its
            // violated bound when moving toward it and never blocks when
            // moving away. Ties keep the largest pivot magnitude (lowest
            // variable index once Bland is active).
            constexpr double kTie = 1e-9;
            const double range = upper_[static_cast<std::size_t>(entering)] -
                                 lower_[static_cast<std::size_t>(entering)];
            double best_t = std::isfinite(range) ? range : kInf;
            int leave_slot = -1;
            int leave_to_upper = 0;
            double best_mag = 0.0;
            int best_idx = total_;
            for (int s = 0; s < m_; ++s) {
                const double wi = enter_dir * w[static_cast<std::size_t>(s)];
                if (std::abs(wi) < opt_.pivot_tol) continue;
                const int j = basic_[static_cast<std::size_t>(s)];
                const double v = value_[static_cast<std::size_t>(j)];
                const double lo = lower_[static_cast<std::size_t>(j)];
                const double hi = upper_[static_cast<std::size_t>(j)];
                double bound;
                int to_upper;
                if (wi > 0.0) {  // this basic decreases
                    if (phase_one && v < lo - opt_.feas_tol) continue;
                    if (phase_one && v > hi + opt_.feas_tol) {
                        bound = hi;
                        to_upper = 1;
                    } else if (std::isfinite(lo)) {
                        bound = lo;
                        to_upper = 0;
                    } else {
                        continue;
                    }
                } else {  // this basic increases
                    if (phase_one && v > hi + opt_.feas_tol) continue;
                    if (phase_one && v < lo - opt_.feas_tol) {
                        bound = lo;
                        to_upper = 0;
                    } else if (std::isfinite(hi)) {
                        bound = hi;
                        to_upper = 1;
                    } else {
                        continue;
                    }
                }
                double t = (v - bound) / wi;
                if (t < 0.0) t = 0.0;
                bool take = false;
                if (t < best_t - kTie) {
                    take = true;
                } else if (t <= best_t + kTie) {
                    if (leave_slot < 0)
                        take = true;  // prefer a pivot over a near-tied bound flip
                    else
                        take = bland ? j < best_idx : std::abs(wi) > best_mag;
                }
                if (take) {
                    best_t = std::min(best_t, t);
                    leave_slot = s;
                    leave_to_upper = to_upper;
                    best_mag = std::abs(wi);
                    best_idx = j;
                } else if (t < best_t) {
                    best_t = t;  // tied loser still caps the step
                }
            }

            if (!std::isfinite(best_t)) return LpStatus::unbounded;
            ++iterations_;

            if (best_t > 0.0) {
                for (int s = 0; s < m_; ++s) {
                    const int j = basic_[static_cast<std::size_t>(s)];
                    value_[static_cast<std::size_t>(j)] -=
                        enter_dir * best_t * w[static_cast<std::size_t>(s)];
                }
                value_[static_cast<std::size_t>(entering)] += enter_dir * best_t;
            }

            if (leave_slot < 0) {
                state_[static_cast<std::size_t>(entering)] =
                    enter_dir > 0 ? VarState::at_upper : VarState::at_lower;
                value_[static_cast<std::size_t>(entering)] =
                    enter_dir > 0 ? upper_[static_cast<std::size_t>(entering)]
                                  : lower_[static_cast<std::size_t>(entering)];
            } else {
                const int leaving = basic_[static_cast<std::size_t>(leave_slot)];
                state_[static_cast<std::size_t>(leaving)] =
                    leave_to_upper ? VarState::at_upper : VarState::at_lower;
                value_[static_cast<std::size_t>(leaving)] =
                    leave_to_upper ? upper_[static_cast<std::size_t>(leaving)]
                                   : lower_[static_cast<std::size_t>(leaving)];
                basic_[static_cast<std::size_t>(leave_slot)] = entering;
                state_[static_cast<std::size_t>(entering)] = VarState::basic;

                Eta e;
                e.slot = leave_slot;
                e.pivot = w[static_cast<std::size_t>(leave_slot)];
                for (int s = 0; s < m_; ++s) {
                    if (s == leave_slot) continue;
                    const double wv = w[static_cast<std::size_t>(s)];
                    if (wv != 0.0) {
                        e.index.push_back(s);
                        e.value.push_back(wv);
                    }
                }
                etas_.push_back(std::move(e));
                if (++pivots_since_factor_ >= opt_.refactor_every) {
                    if (!refactorize()) repair_and_refactorize();
                    compute_basic_values();
                }
            }

            if (phase_one && max_infeasibility() <= opt_.feas_tol) return LpStatus::optimal;
        }
        return LpStatus::iteration_limit;
    }

    void fill_solution(LpSolution& sol) {
        if (!etas_.empty() && !refactorize()) repair_and_refactorize();
        compute_basic_values();

        sol.x.assign(static_cast<std::size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j)
            sol.x[static_cast<std::size_t>(j)] = value_[static_cast<std::size_t>(j)];

        std::vector<double> act(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < n_; ++j)
            if (sol.x[static_cast<std::size_t>(j)] != 0.0)
                add_column(j, sol.x[static_cast<std::size_t>(j)], act);
        sol.row_activity = act;

        double obj = 0.0;
        for (int j = 0; j < n_; ++j)
            obj += cost_[static_cast<std::size_t>(j)] * sol.x[static_cast<std::size_t>(j)];
        sol.objective = obj;
        sol.iterations = iterations_;

        std::vector<double> y(static_cast<std::size_t>(m_), 0.0);
        for (int s = 0; s < m_; ++s)
            y[static_cast<std::size_t>(s)] =
                cost_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(s)])];
        btran(y);
        sol.dual = y;
        sol.reduced_cost.assign(static_cast<std::size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j)
            sol.reduced_cost[static_cast<std::size_t>(j)] =
                cost_[static_cast<std::size_t>(j)] - dot_column(j, y);

        double prim = 0.0;
        for (int j = 0; j < total_; ++j) {
            const double v = value_[static_cast<std::size_t>(j)];
            prim = std::max(prim, lower_[static_cast<std::size_t>(j)] - v);
            prim = std::max(prim, v - upper_[static_cast<std::size_t>(j)]);
        }
        for (int i = 0; i < m_; ++i)
            prim = std::max(prim, std::abs(act[static_cast<std::size_t>(i)] -
                                           value_[static_cast<std::size_t>(n_ + i)]));
        sol.max_primal_residual = std::max(0.0, prim);

        // Dual residual: wrong-signed reduced costs at bounds plus nonzero
        // reduced costs on basics (complementary slackness), skipping fixed
        // columns where any sign is admissible.
        double dual = 0.0;
        if (sol.status == LpStatus::optimal) {
            for (int j = 0; j < total_; ++j) {
                const double d = cost_[static_cast<std::size_t>(j)] - dot_column(j, y);
                const VarState st = state_[static_cast<std::size_t>(j)];
                if (st == VarState::basic)
                    dual = std::max(dual, std::abs(d));
                else if (lower_[static_cast<std::size_t>(j)] ==
                         upper_[static_cast<std::size_t>(j)])
                    continue;
                else if (st == VarState::at_lower)
                    dual = std::max(dual, -d);
                else
                    dual = std::max(dual, d);
            }
        }
        sol.max_dual_residual = std::max(0.0, dual);
    }

    struct Eta {
        int slot = 0;
        double pivot = 0.0;
        std::vector<int> index;
        std::vector<double> value;
    };

    SimplexOptions opt_;
    int n_ = 0, m_ = 0, total_ = 0;
    Csc a_;
    std::vector<double> lower_, upper_, cost_, value_;
    std::vector<VarState> state_;
    std::vector<int> basic_;
    BasisLu lu_;
    std::vector<Eta> etas_;
    std::vector<BasisLu::Unpivoted> last_unpivoted_;
    int pivots_since_factor_ = 0;
    long iterations_ = 0;
};

}  // namespace lpdetail

// Solves a bounded-variable LP with a primal simplex method. Deterministic:
// identical inputs produce bitwise identical solutions.
inline LpSolution solve_lp(const SparseLp& lp, const SimplexOptions& options = {},
                           const BasisHint* hint = nullptr) {
    validate(lp);
    lpdetail::Simplex solver(lp, options);
    return solver.run(hint);
}

}  // namespace ewhbench
