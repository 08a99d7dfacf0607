// Writes a synthetic corpus in the classic ML-100k layout so the toolkit can
// be exercised without shipping the real dataset.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "recrobust/datagen.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic ML-100k-format corpus generator"};
    std::string out_dir;
    recrobust::datagen::Ml100kOptions options;
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--seed", options.seed, "generator seed");
    app.add_option("--users", options.n_users, "number of users");
    app.add_option("--items", options.n_items, "number of items");
    app.add_option("--interactions", options.n_interactions, "number of ratings");
    app.add_option("--male-share", options.male_interaction_share,
                   "male share of interactions");
    CLI11_PARSE(app, argc, argv);

    try {
        recrobust::datagen::write_ml100k(out_dir, options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote u.data, u.user, u.item to " << out_dir << "\n";
    return 0;
}
