#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "recrobust/data.hpp"
#include "recrobust/encoder.hpp"
#include "recrobust/kernels.hpp"

namespace recrobust {

// Feature tables read at score time. Perturbed test-side tables are passed
// here; models that ignore features ignore them.
struct EvalContext {
    const FeatureTable* user_features = nullptr;
    const FeatureTable* item_features = nullptr;
};

class Recommender {
public:
    virtual ~Recommender() = default;

    virtual std::string name() const = 0;
    virtual bool uses_features() const = 0;

    // Deterministic given (data, hyperparameters, seed). Feature tables are
    // read from the dataset (clean train-side data).
    virtual void fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
                     std::uint64_t seed) = 0;

    virtual double score(const std::string& user_id, const std::string& item_id,
                         const EvalContext& ctx) const = 0;

    // Same values as calling score() per candidate; overridden where a batch
    // formulation is cheaper.
    virtual std::vector<double> score_all(const std::string& user_id,
                                          std::span<const std::string> candidates,
                                          const EvalContext& ctx) const;

    // Top-K candidates by (score desc, item id asc).
    std::vector<std::string> rank(const std::string& user_id,
                                  std::span<const std::string> candidates,
                                  std::size_t k, const EvalContext& ctx) const;

    // Exact round-trip checkpoint: hyperparameters, seed, parameters.
    virtual nlohmann::json checkpoint() const = 0;

    // FNV over the fitted parameters; equal fingerprints on equal fits.
    virtual std::uint64_t parameter_fingerprint() const = 0;

    // Mean training loss per epoch, empty for non-iterative models.
    virtual const std::vector<double>& epoch_losses() const;
};

struct PopHyper {
    // no tunables
};

struct ItemKnnHyper {
    int k = 100;
    double shrinkage = 0.0;
};

struct BprHyper {
    int factors = 64;
    double learning_rate = 0.01;
    double l2 = 1e-4;
    int epochs = 30;
    int negatives_per_positive = 1;
    double positive_threshold = 4.0;
};

struct LrHyper {
    double learning_rate = 0.05;
    double l2 = 1e-5;
    int epochs = 20;
    double positive_threshold = 4.0;
};

struct FmHyper {
    int factors = 16;
    double learning_rate = 0.05;
    double l2 = 1e-5;
    int epochs = 20;
    double positive_threshold = 4.0;
};

// Most-popular-item baseline: score(u, i) = train count of i / max count.
class PopModel final : public Recommender {
public:
    explicit PopModel(PopHyper hyper = {}) : hyper_(hyper) {}

    std::string name() const override { return "pop"; }
    bool uses_features() const override { return false; }
    void fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
             std::uint64_t seed) override;
    double score(const std::string& user_id, const std::string& item_id,
                 const EvalContext& ctx) const override;
    nlohmann::json checkpoint() const override;
    std::uint64_t parameter_fingerprint() const override;

    static std::unique_ptr<PopModel> from_checkpoint(const nlohmann::json& j);

private:
    PopHyper hyper_;
    std::map<std::string, std::size_t> item_counts_;
    std::size_t max_count_ = 0;
};

// Item-based KNN with shrunk cosine similarity over the train rating matrix.
class ItemKnnModel final : public Recommender {
public:
    explicit ItemKnnModel(ItemKnnHyper hyper = {}) : hyper_(hyper) {}

    std::string name() const override { return "itemknn"; }
    bool uses_features() const override { return false; }
    void fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
             std::uint64_t seed) override;
    double score(const std::string& user_id, const std::string& item_id,
                 const EvalContext& ctx) const override;
    std::vector<double> score_all(const std::string& user_id,
                                  std::span<const std::string> candidates,
                                  const EvalContext& ctx) const override;
    nlohmann::json checkpoint() const override;
    std::uint64_t parameter_fingerprint() const override;

    static std::unique_ptr<ItemKnnModel> from_checkpoint(const nlohmann::json& j);

    const std::vector<std::vector<Neighbor>>& neighbors() const { return neighbors_; }

    // Thread count used when building the similarity rows (0 = default).
    void set_fit_threads(int threads) { fit_threads_ = threads; }

private:
    void rebuild_transpose();

    ItemKnnHyper hyper_;
    int fit_threads_ = 0;
    std::vector<std::string> user_ids_, item_ids_;
    std::unordered_map<std::string, std::uint32_t> user_index_, item_index_;
    // Per user: (item, rating) history from train, item-sorted.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> history_;
    std::vector<std::vector<Neighbor>> neighbors_;
    // reverse adjacency: for item j, the items i with j in neighbors(i)
    std::vector<std::vector<Neighbor>> transpose_;
};

// Matrix factorization trained with the BPR pairwise loss.
// score(u, i) = b_i + p_u . q_i.
class BprModel final : public Recommender {
public:
    explicit BprModel(BprHyper hyper = {}) : hyper_(hyper) {}

    std::string name() const override { return "bpr"; }
    bool uses_features() const override { return false; }
    void fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
             std::uint64_t seed) override;
    double score(const std::string& user_id, const std::string& item_id,
                 const EvalContext& ctx) const override;
    std::vector<double> score_all(const std::string& user_id,
                                  std::span<const std::string> candidates,
                                  const EvalContext& ctx) const override;
    nlohmann::json checkpoint() const override;
    std::uint64_t parameter_fingerprint() const override;
    const std::vector<double>& epoch_losses() const override { return epoch_losses_; }

    static std::unique_ptr<BprModel> from_checkpoint(const nlohmann::json& j);

private:
    BprHyper hyper_;
    std::vector<std::string> user_ids_, item_ids_;
    std::unordered_map<std::string, std::uint32_t> user_index_, item_index_;
    std::vector<double> user_factors_;  // n_users x factors
    std::vector<double> item_factors_;  // n_items x factors
    std::vector<double> item_bias_;
    std::vector<double> epoch_losses_;
};

// Logistic regression / factorization machine over the one-hot encoding.
// Shared SGD loop; the FM adds the factorized second-order term.
class LinearModelBase : public Recommender {
public:
    bool uses_features() const override { return true; }
    void fit(const Dataset& dataset, std::span<const std::size_t> train_indices,
             std::uint64_t seed) override;
    double score(const std::string& user_id, const std::string& item_id,
                 const EvalContext& ctx) const override;
    std::vector<double> score_all(const std::string& user_id,
                                  std::span<const std::string> candidates,
                                  const EvalContext& ctx) const override;
    std::uint64_t parameter_fingerprint() const override;
    const std::vector<double>& epoch_losses() const override { return epoch_losses_; }

    const FeatureEncoder& encoder() const { return encoder_; }

protected:
    virtual int factors() const = 0;          // 0 for plain LR
    virtual double learning_rate() const = 0;
    virtual double l2() const = 0;
    virtual int epochs() const = 0;
    virtual double positive_threshold() const = 0;

    double raw_score(std::span<const ActiveFeature> x) const;
    nlohmann::json parameters_json() const;
    void parameters_from_json(const nlohmann::json& j);

    FeatureEncoder encoder_;
    double w0_ = 0.0;
    std::vector<double> w_;
    std::vector<double> v_;  // dim x factors, empty for LR
    std::vector<double> epoch_losses_;
};

class LrModel final : public LinearModelBase {
public:
    explicit LrModel(LrHyper hyper = {}) : hyper_(hyper) {}

    std::string name() const override { return "lr"; }
    nlohmann::json checkpoint() const override;
    static std::unique_ptr<LrModel> from_checkpoint(const nlohmann::json& j);

protected:
    int factors() const override { return 0; }
    double learning_rate() const override { return hyper_.learning_rate; }
    double l2() const override { return hyper_.l2; }
    int epochs() const override { return hyper_.epochs; }
    double positive_threshold() const override { return hyper_.positive_threshold; }

private:
    LrHyper hyper_;
};

class FmModel final : public LinearModelBase {
public:
    explicit FmModel(FmHyper hyper = {}) : hyper_(hyper) {}

    std::string name() const override { return "fm"; }
    nlohmann::json checkpoint() const override;
    static std::unique_ptr<FmModel> from_checkpoint(const nlohmann::json& j);

protected:
    int factors() const override { return hyper_.factors; }
    double learning_rate() const override { return hyper_.learning_rate; }
    double l2() const override { return hyper_.l2; }
    int epochs() const override { return hyper_.epochs; }
    double positive_threshold() const override { return hyper_.positive_threshold; }

private:
    FmHyper hyper_;
};

// Names accepted in configs, sorted.
std::vector<std::string> known_model_names();

// Builds a model from its config name and hyperparameter overrides
// (a JSON object; unknown keys are rejected). The positive threshold comes
// from the metrics section and applies to bpr/lr/fm labeling.
std::unique_ptr<Recommender> make_model(const std::string& name,
                                        const nlohmann::json& overrides,
                                        double positive_threshold);

// Checkpoint envelope round-trip.
void save_checkpoint(const Recommender& model, const std::filesystem::path& path);
std::unique_ptr<Recommender> load_checkpoint(const std::filesystem::path& path);

}  // namespace recrobust
