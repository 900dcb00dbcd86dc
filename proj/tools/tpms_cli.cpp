// Command-line front end for running discovery campaigns: state lives in
// a JSON file, measurements come in as curve CSVs, proposals/meshes/reports
// go out as files next to the state.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "tpms/campaign.hpp"

namespace fs = std::filesystem;

namespace {

fs::path default_state_path() {
    if (const char* dir = std::getenv("TPMS_STATE_DIR")) return fs::path(dir) / "campaign.json";
    return fs::path("campaign.json");
}

tpms::CampaignConfig make_config(bool fast, std::optional<std::size_t> pool_size, std::optional<int> initial) {
    tpms::CampaignConfig config = fast ? tpms::fast_campaign_config() : tpms::default_campaign_config();
    if (pool_size) config.pool_size = *pool_size;
    if (initial) config.initial_designs = *initial;
    return config;
}

void print_report(const tpms::CampaignReport& report) {
    std::printf("%-10s %6s %10s %10s %10s %10s\n", "batch", "n", "min", "max", "mean", "median");
    for (const auto& row : report.rows) {
        std::printf("%-10s %6d %10.2f %10.2f %10.2f %10.2f\n", row.label.c_str(), row.count, row.min, row.max,
                    row.mean, row.median);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop discovery of energy-dissipating TPMS lattices"};
    app.require_subcommand(1);

    std::string state_path = default_state_path().string();
    app.add_option("--state", state_path, "campaign state file (default $TPMS_STATE_DIR/campaign.json)");

    std::uint64_t seed = 1;
    bool fast = false;
    std::optional<std::size_t> pool_size;
    std::optional<double> kappa_override;
    std::optional<int> batch_size;

    auto* init = app.add_subcommand("init", "start a campaign with a uniform initial batch");
    init->add_option("--seed", seed, "campaign seed");
    init->add_flag("--fast", fast, "CI-scale profile (small pool, lean ensemble)");
    init->add_option("--batch-size", batch_size, "initial batch size (default 23)");

    auto* propose = app.add_subcommand("propose", "retrain and propose the next batch");
    propose->add_option("--pool-size", pool_size, "candidate pool size");
    propose->add_option("--kappa-override", kappa_override, "override the scheduled kappa");

    auto* ingest = app.add_subcommand("ingest", "ingest measurement CSVs (<design-id>_rep<k>.csv)");
    std::vector<std::string> files;
    ingest->add_option("files", files, "curve files")->required()->expected(-1);

    auto* report = app.add_subcommand("report", "per-batch statistics, PCA projection, curve data");
    std::string report_dir = "report";
    report->add_option("--out", report_dir, "output directory");

    auto* meshes = app.add_subcommand("export-meshes", "write one STL per proposed design of a batch");
    int mesh_batch = 0;
    std::string mesh_dir = "meshes";
    meshes->add_option("batch", mesh_batch, "batch index")->required();
    meshes->add_option("--out", mesh_dir, "output directory");

    auto* virt = app.add_subcommand("virtual-run", "full closed loop against the synthetic lab");
    virt->add_option("--seed", seed, "campaign seed");
    virt->add_flag("--fast", fast, "CI-scale profile");
    virt->add_option("--pool-size", pool_size, "candidate pool size");
    virt->add_option("--batch-size", batch_size, "initial batch size");
    std::string work_dir;
    virt->add_option("--out", work_dir, "working directory (default: next to the state file)");

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path state_file(state_path);
        const fs::path state_dir = state_file.has_parent_path() ? state_file.parent_path() : fs::path(".");

        if (init->parsed()) {
            const auto config = make_config(fast, pool_size, batch_size);
            const auto state = tpms::init_campaign(config, seed);
            tpms::save_state(state, state_file);
            std::cout << "initialized campaign with " << state.batches.front().design_ids.size()
                      << " uniform designs at " << state_file << "\n";
        } else if (propose->parsed()) {
            auto state = tpms::load_state(state_file);
            if (pool_size) state.config.pool_size = *pool_size;
            const auto outcome = tpms::propose_next_batch(state, state_dir, kappa_override);
            tpms::save_state(state, state_file);
            std::cout << "batch " << outcome.batch_index << " proposed (kappa " << outcome.kappa << ") -> "
                      << outcome.proposal_csv << "\n";
            if (outcome.pool_exhausted) {
                std::cout << "warning: pool exhausted before reaching the full batch size\n";
            }
        } else if (ingest->parsed()) {
            auto state = tpms::load_state(state_file);
            std::vector<fs::path> paths(files.begin(), files.end());
            tpms::ingest_results(state, paths);
            tpms::save_state(state, state_file);
            std::cout << "ingested " << paths.size() << " files (state revision " << state.revision << ")\n";
        } else if (report->parsed()) {
            const auto state = tpms::load_state(state_file);
            print_report(tpms::write_report(state, report_dir));
            std::cout << "report written to " << report_dir << "\n";
        } else if (meshes->parsed()) {
            const auto state = tpms::load_state(state_file);
            const auto outcome = tpms::export_batch_meshes(state, mesh_batch, mesh_dir);
            std::cout << "wrote " << outcome.written.size() << " meshes to " << mesh_dir << "\n";
            for (const auto& [id, reason] : outcome.skipped) {
                std::cout << "skipped " << id << ": " << reason << "\n";
            }
        } else if (virt->parsed()) {
            auto config = make_config(fast, pool_size, batch_size);
            const fs::path dir = work_dir.empty() ? state_dir / "virtual" : fs::path(work_dir);
            const auto state = tpms::run_virtual_campaign(config, seed, dir);
            tpms::save_state(state, state_file);
            print_report(tpms::summarize(state));
            std::cout << "virtual campaign complete; artifacts in " << dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
