#include "recrobust/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "recrobust/common.hpp"

namespace recrobust {

int resolve_threads(int requested) {
#ifdef _OPENMP
    if (requested > 0) return requested;
    return omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

RatingMatrix build_rating_matrix(std::uint32_t n_users, std::uint32_t n_items,
                                 const std::vector<std::uint32_t>& users,
                                 const std::vector<std::uint32_t>& items,
                                 const std::vector<double>& ratings) {
    if (users.size() != items.size() || users.size() != ratings.size())
        throw Error("build_rating_matrix: column lengths differ");
    RatingMatrix m;
    m.n_users = n_users;
    m.n_items = n_items;
    const std::size_t nnz = users.size();

    m.user_offsets.assign(n_users + 1, 0);
    m.item_offsets.assign(n_items + 1, 0);
    for (std::size_t e = 0; e < nnz; ++e) {
        ++m.user_offsets[users[e] + 1];
        ++m.item_offsets[items[e] + 1];
    }
    for (std::uint32_t u = 0; u < n_users; ++u) m.user_offsets[u + 1] += m.user_offsets[u];
    for (std::uint32_t i = 0; i < n_items; ++i) m.item_offsets[i + 1] += m.item_offsets[i];

    m.user_items.resize(nnz);
    m.user_ratings.resize(nnz);
    m.item_users.resize(nnz);
    m.item_ratings.resize(nnz);
    std::vector<std::size_t> ucur(m.user_offsets.begin(), m.user_offsets.end() - 1);
    std::vector<std::size_t> icur(m.item_offsets.begin(), m.item_offsets.end() - 1);
    for (std::size_t e = 0; e < nnz; ++e) {
        const std::size_t up = ucur[users[e]]++;
        m.user_items[up] = items[e];
        m.user_ratings[up] = ratings[e];
        const std::size_t ip = icur[items[e]]++;
        m.item_users[ip] = users[e];
        m.item_ratings[ip] = ratings[e];
    }

    // sort each row by column index for deterministic accumulation order
    auto sort_rows = [](std::vector<std::size_t>& offsets, std::vector<std::uint32_t>& cols,
                        std::vector<double>& vals, std::uint32_t n_rows) {
        std::vector<std::pair<std::uint32_t, double>> buf;
        for (std::uint32_t r = 0; r < n_rows; ++r) {
            const std::size_t lo = offsets[r], hi = offsets[r + 1];
            buf.assign(hi - lo, {});
            for (std::size_t p = lo; p < hi; ++p) buf[p - lo] = {cols[p], vals[p]};
            std::sort(buf.begin(), buf.end());
            for (std::size_t p = lo; p < hi; ++p) {
                cols[p] = buf[p - lo].first;
                vals[p] = buf[p - lo].second;
            }
        }
    };
    sort_rows(m.user_offsets, m.user_items, m.user_ratings, n_users);
    sort_rows(m.item_offsets, m.item_users, m.item_ratings, n_items);

    m.item_norms.assign(n_items, 0.0);
    for (std::uint32_t i = 0; i < n_items; ++i) {
        double sq = 0.0;
        for (std::size_t p = m.item_offsets[i]; p < m.item_offsets[i + 1]; ++p)
            sq += m.item_ratings[p] * m.item_ratings[p];
        m.item_norms[i] = std::sqrt(sq);
    }
    return m;
}

namespace {

struct RowScratch {
    std::vector<double> acc;
    std::vector<std::uint32_t> stamp;
    std::vector<std::uint32_t> touched;
    std::uint32_t epoch = 0;

    explicit RowScratch(std::uint32_t n_items) : acc(n_items, 0.0), stamp(n_items, 0) {}
};

// One similarity row: dot products against every co-rated item, gathered by
// walking the histories of the raters of `item`. Accumulation order is fixed
// by the sorted CSR rows, so the row is identical however rows are scheduled
// across threads.
void similarity_row(const RatingMatrix& m, std::uint32_t item, double shrinkage,
                    RowScratch& scratch, std::vector<Neighbor>& out, int k) {
    auto& [acc, stamp, touched, epoch] = scratch;
    ++epoch;
    touched.clear();
    for (std::size_t p = m.item_offsets[item]; p < m.item_offsets[item + 1]; ++p) {
        const std::uint32_t u = m.item_users[p];
        const double r_ui = m.item_ratings[p];
        for (std::size_t q = m.user_offsets[u]; q < m.user_offsets[u + 1]; ++q) {
            const std::uint32_t j = m.user_items[q];
            if (j == item) continue;
            if (stamp[j] != epoch) {
                stamp[j] = epoch;
                acc[j] = 0.0;
                touched.push_back(j);
            }
            acc[j] += r_ui * m.user_ratings[q];
        }
    }
    out.clear();
    out.reserve(touched.size());
    for (std::uint32_t j : touched) {
        const double denom = m.item_norms[item] * m.item_norms[j] + shrinkage;
        if (denom > 0.0) out.push_back(Neighbor{j, acc[j] / denom});
    }
    auto better = [](const Neighbor& a, const Neighbor& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.item < b.item;
    };
    if (out.size() > static_cast<std::size_t>(k)) {
        std::nth_element(out.begin(), out.begin() + k, out.end(), better);
        out.resize(k);
    }
    std::sort(out.begin(), out.end(), better);
}

}  // namespace

std::vector<std::vector<Neighbor>> item_topk_similarity_serial(const RatingMatrix& m,
                                                               int k,
                                                               double shrinkage) {
    if (k < 1) throw Error("top-k similarity requires k >= 1");
    std::vector<std::vector<Neighbor>> rows(m.n_items);
    RowScratch scratch(m.n_items);
    for (std::uint32_t i = 0; i < m.n_items; ++i)
        similarity_row(m, i, shrinkage, scratch, rows[i], k);
    return rows;
}

std::vector<std::vector<Neighbor>> item_topk_similarity(const RatingMatrix& m,
                                                        int k,
                                                        double shrinkage,
                                                        int threads) {
    if (k < 1) throw Error("top-k similarity requires k >= 1");
    std::vector<std::vector<Neighbor>> rows(m.n_items);
#ifdef _OPENMP
    const int n_threads = resolve_threads(threads);
    #pragma omp parallel num_threads(n_threads)
    {
        RowScratch scratch(m.n_items);
        #pragma omp for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(m.n_items); ++i)
            similarity_row(m, static_cast<std::uint32_t>(i), shrinkage, scratch, rows[i], k);
    }
#else
    (void)threads;
    std::vector<std::vector<Neighbor>> serial_rows = item_topk_similarity_serial(m, k, shrinkage);
    rows = std::move(serial_rows);
#endif
    return rows;
}

std::vector<double> dense_similarity_row(const RatingMatrix& m,
                                         std::uint32_t item,
                                         double shrinkage) {
    std::vector<double> acc(m.n_items, 0.0);
    for (std::size_t p = m.item_offsets[item]; p < m.item_offsets[item + 1]; ++p) {
        const std::uint32_t u = m.item_users[p];
        const double r_ui = m.item_ratings[p];
        for (std::size_t q = m.user_offsets[u]; q < m.user_offsets[u + 1]; ++q)
            acc[m.user_items[q]] += r_ui * m.user_ratings[q];
    }
    std::vector<double> sims(m.n_items, 0.0);
    for (std::uint32_t j = 0; j < m.n_items; ++j) {
        if (j == item) continue;
        const double denom = m.item_norms[item] * m.item_norms[j] + shrinkage;
        if (denom > 0.0 && acc[j] != 0.0) sims[j] = acc[j] / denom;
    }
    return sims;
}

}  // namespace recrobust
