#pragma once

#include <cstdint>
#include <vector>

namespace recrobust {

// Compressed interaction matrix over dense user/item indices. `user_major`
// rows are users holding (item, rating) pairs sorted by item; `item_major`
// rows are items holding (user, rating) pairs sorted by user.
struct RatingMatrix {
    std::uint32_t n_users = 0;
    std::uint32_t n_items = 0;

    std::vector<std::size_t> user_offsets;   // n_users + 1
    std::vector<std::uint32_t> user_items;
    std::vector<double> user_ratings;

    std::vector<std::size_t> item_offsets;   // n_items + 1
    std::vector<std::uint32_t> item_users;
    std::vector<double> item_ratings;

    std::vector<double> item_norms;          // Euclidean norm of each item column
};

RatingMatrix build_rating_matrix(std::uint32_t n_users, std::uint32_t n_items,
                                 const std::vector<std::uint32_t>& users,
                                 const std::vector<std::uint32_t>& items,
                                 const std::vector<double>& ratings);

struct Neighbor {
    std::uint32_t item = 0;
    double sim = 0.0;

    bool operator==(const Neighbor&) const = default;
};

// Shrunk cosine rows: sim(i,j) = <r_i, r_j> / (|r_i| |r_j| + shrinkage),
// top-k per item, sorted by (sim desc, item asc). Rows of items without
// co-raters come back empty. Serial reference implementation.
std::vector<std::vector<Neighbor>> item_topk_similarity_serial(const RatingMatrix& m,
                                                               int k,
                                                               double shrinkage);

// OpenMP variant; rows are independent, so the output is bit-identical to
// the serial reference for every thread count. threads <= 0 picks the
// runtime default.
std::vector<std::vector<Neighbor>> item_topk_similarity(const RatingMatrix& m,
                                                        int k,
                                                        double shrinkage,
                                                        int threads);

// Dense similarity row without the top-k truncation; used by tests as the
// symmetry/cosine oracle and by the serial kernel internally.
std::vector<double> dense_similarity_row(const RatingMatrix& m,
                                         std::uint32_t item,
                                         double shrinkage);

// Number of threads a parallel region would use for a given request.
int resolve_threads(int requested);

}  // namespace recrobust
