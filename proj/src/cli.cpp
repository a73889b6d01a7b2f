#include "osmargin/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

#include "osmargin/gradcheck.hpp"

namespace osm {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

fs::path ensure_out_dir(const RunConfig& config) {
    fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ConfigError("[task] out: cannot create output directory '" + config.out_dir + "'");
    return dir;
}

const char* source_name(DataSource source) {
    switch (source) {
        case DataSource::blobs: return "blobs";
        case DataSource::rings: return "rings";
        case DataSource::ocr_seq: return "ocr-seq";
        case DataSource::csv: return "csv";
    }
    return "?";
}

// Runs n independent cells on up to worker_threads() threads; results land
// in cell order, so output is identical to a sequential run.
void run_cells(int n, const std::function<void(int)>& cell) {
    const int workers = std::min(n, worker_threads());
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) cell(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    cell(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double final_eval_accuracy(const TrainReport& report) {
    return report.epochs.empty() ? 0.0 : report.epochs.back().eval_accuracy;
}

TrainReport run_one_training(const RunConfig& config, LossKind loss, DataSource source, uint64_t seed,
                             const ModelSpec& model_spec) {
    TrainConfig train_config = config.train;
    train_config.loss = loss;
    train_config.seed = seed;
    if (is_sequence_loss(loss)) {
        // Plain CTC keeps the exponential-decay default unless the config
        // pinned a schedule explicitly; this mirrors the per-loss defaults.
        auto [train_data, eval_data] = build_sequence_datasets(config.data);
        return train_ctc(train_config, model_spec, train_data, eval_data);
    }
    auto [train_data, eval_data] = build_datasets(config.data, source);
    return train_classifier(train_config, model_spec, train_data, eval_data);
}

std::string describe_model(const ModelSpec& spec) {
    return spec.kind == Model::Kind::linear ? std::string("linear")
                                            : "mlp(hidden=" + std::to_string(spec.hidden_dim) + ")";
}

std::string describe_optimizer(const TrainConfig& train) {
    std::string out = train.optimizer.kind == OptimizerConfig::Kind::sgd ? "sgd" : "adam";
    out += " lr=" + format_double(train.optimizer.initial_lr);
    if (train.optimizer.kind == OptimizerConfig::Kind::sgd) {
        out += " momentum=" + format_double(train.optimizer.sgd.momentum);
        out += " weight_decay=" + format_double(train.optimizer.sgd.weight_decay);
    } else {
        out += " beta1=" + format_double(train.optimizer.adam.beta1);
        out += " beta2=" + format_double(train.optimizer.adam.beta2);
    }
    return out;
}

}  // namespace

int worker_threads() {
    if (const char* env = std::getenv("OSMARGIN_THREADS")) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(env, env + std::string_view(env).size(), v);
        if (ec == std::errc{} && v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void run_train(const RunConfig& config, std::ostream& out) {
    const fs::path dir = ensure_out_dir(config);

    TrainReport report;
    double total_seconds = 0.0;
    if (config.task == TaskKind::ocr) {
        if (!is_sequence_loss(config.train.loss))
            throw ConfigError("[train] loss: ocr task needs osm-ctc or ctc");
        auto [train_data, eval_data] = build_sequence_datasets(config.data);
        report = train_ctc(config.train, config.model, train_data, eval_data);
    } else {
        if (is_sequence_loss(config.train.loss))
            throw ConfigError("[train] loss: classify task cannot use a ctc loss");
        auto [train_data, eval_data] = build_datasets(config.data, config.data.source);
        report = train_classifier(config.train, config.model, train_data, eval_data);
    }
    for (const auto& r : report.epochs) total_seconds += r.seconds;

    write_file(dir / "report.csv", report_to_csv(report));
    report.final_model.save((dir / "model.ckpt").string());

    std::string summary;
    summary += "osmargin train summary\n";
    summary += "task: " + std::string(config.task == TaskKind::ocr ? "ocr" : "classify") + "\n";
    summary += "loss: " + std::string(loss_kind_name(config.train.loss)) + "\n";
    summary += "dataset: " + std::string(source_name(config.data.source)) + "\n";
    summary += "model: " + describe_model(config.model) + "\n";
    summary += "epochs: " + std::to_string(config.train.epochs) +
               "  batch_size: " + std::to_string(config.train.batch_size) +
               "  seed: " + std::to_string(config.train.seed) + "\n";
    summary += "optimizer: " + describe_optimizer(config.train) + "\n";
    summary += "osm: alpha=" + format_double(config.train.hp.alpha) +
               " lambda=" + format_double(config.train.hp.lambda) +
               " lambda_min=" + format_double(config.train.hp.lambda_min) +
               " lambda_max=" + format_double(config.train.hp.lambda_max) + "\n";
    if (!report.epochs.empty()) {
        const auto& last = report.epochs.back();
        summary += "final train loss: " + format_double(last.train_loss) + "\n";
        summary += "final train accuracy: " + format_double(last.train_accuracy) + "\n";
        summary += "final eval accuracy: " + format_double(last.eval_accuracy) + "\n";
    }
    if (config.task == TaskKind::classify && config.train.loss != LossKind::binary_ce) {
        const auto [train_data, eval_data] = build_datasets(config.data, config.data.source);
        const MarginStats stats = margin_stats(report.final_model, train_data, config.train.hp);
        summary += "margin stats (train set, quantiles 5/25/50/75/95):\n";
        summary += "  true-class scores:";
        for (double q : stats.true_class) summary += " " + format_double(q);
        summary += "\n  off-class scores: ";
        for (double q : stats.off_class) summary += " " + format_double(q);
        summary += "\n  in [0, lambda_min] band: " + format_double(stats.true_in_band);
        summary += "\n  beyond lambda_max:       " + format_double(stats.off_beyond_max) + "\n";
    }
    summary += "wall clock: " + format_double(total_seconds) + " s\n";
    write_file(dir / "summary.txt", summary);

    out << "train: wrote " << (dir / "report.csv").string() << ", summary.txt, model.ckpt\n";
    if (!report.epochs.empty()) {
        out << "train: final train_acc=" << format_double(report.epochs.back().train_accuracy)
            << " eval_acc=" << format_double(report.epochs.back().eval_accuracy) << "\n";
    }
}

void run_sweep(const RunConfig& config, std::ostream& out) {
    if (config.sweep.grids.empty()) throw ConfigError("[sweep]: no grids given (alpha|lambda|lambda_max|lambda_min)");
    if (config.task == TaskKind::ocr) throw ConfigError("[task] kind: sweep supports classify tasks only");
    const fs::path dir = ensure_out_dir(config);

    struct Row {
        HyperParams hp;
        double accuracy = -1.0;
        int reject_reason = 0;  // 0 ok, 1 lambda_max <= lambda_min
    };
    std::vector<Row> rows;
    for (const auto& [factor, values] : config.sweep.grids) {
        for (const double value : values) {
            Row row;
            row.hp = config.train.hp;
            if (factor == "alpha") row.hp.alpha = value;
            if (factor == "lambda") row.hp.lambda = value;
            if (factor == "lambda_max") row.hp.lambda_max = value;
            if (factor == "lambda_min") row.hp.lambda_min = value;
            if (!(row.hp.lambda_max > row.hp.lambda_min)) row.reject_reason = 1;
            rows.push_back(row);
        }
    }

    run_cells(static_cast<int>(rows.size()), [&](int i) {
        if (rows[i].reject_reason != 0) return;
        RunConfig cell = config;
        cell.train.hp = rows[i].hp;
        const TrainReport report =
            run_one_training(cell, cell.train.loss, cell.data.source, cell.train.seed, cell.model);
        rows[i].accuracy = final_eval_accuracy(report);
    });

    // reject_reason 1 = invalid margin pair (lambda_max <= lambda_min); the
    // accuracy cell is -1 for rejected rows.
    std::string csv = "# alpha,lambda,lambda_max,lambda_min,accuracy,reject_reason\n";
    for (const auto& row : rows) {
        csv += format_double(row.hp.alpha) + "," + format_double(row.hp.lambda) + "," +
               format_double(row.hp.lambda_max) + "," + format_double(row.hp.lambda_min) + "," +
               format_double(row.accuracy) + "," + std::to_string(row.reject_reason) + "\n";
    }
    write_file(dir / "sweep.csv", csv);
    out << "sweep: " << rows.size() << " rows -> " << (dir / "sweep.csv").string() << "\n";
}

void run_compare(const RunConfig& config, std::ostream& out) {
    if (config.compare.losses.empty()) throw ConfigError("[compare] losses: empty");
    if (config.compare.datasets.empty()) throw ConfigError("[compare] datasets: empty");
    for (LossKind loss : config.compare.losses)
        if (is_sequence_loss(loss)) throw ConfigError("[compare] losses: use ocr-compare for ctc losses");
    const fs::path dir = ensure_out_dir(config);

    const int repeats = config.compare.repeats;
    struct Cell {
        double mean = 0.0;
        double lo = 0.0;
        double hi = 0.0;
    };
    const int n_losses = static_cast<int>(config.compare.losses.size());
    const int n_datasets = static_cast<int>(config.compare.datasets.size());
    std::vector<Cell> cells(static_cast<size_t>(n_losses) * n_datasets);

    run_cells(n_losses * n_datasets, [&](int idx) {
        const DataSource source = config.compare.datasets[idx / n_losses];
        const LossKind loss = config.compare.losses[idx % n_losses];
        double sum = 0.0;
        double lo = 1.0;
        double hi = 0.0;
        for (int r = 0; r < repeats; ++r) {
            // Shared seeds across losses keep cells comparable.
            const TrainReport report =
                run_one_training(config, loss, source, config.train.seed + static_cast<uint64_t>(r), config.model);
            const double acc = final_eval_accuracy(report);
            sum += acc;
            lo = std::min(lo, acc);
            hi = std::max(hi, acc);
        }
        cells[idx] = {sum / repeats, lo, hi};
    });

    std::string csv = "# dataset,loss,acc_mean,acc_min,acc_max\n";
    for (int d = 0; d < n_datasets; ++d) {
        double best_osm = -1.0;
        double best_baseline = -1.0;
        for (int l = 0; l < n_losses; ++l) {
            const Cell& cell = cells[static_cast<size_t>(d) * n_losses + l];
            const LossKind loss = config.compare.losses[l];
            csv += std::string(source_name(config.compare.datasets[d])) + "," + loss_kind_name(loss) + "," +
                   format_double(cell.mean) + "," + format_double(cell.lo) + "," + format_double(cell.hi) + "\n";
            if (is_osm_loss(loss)) best_osm = std::max(best_osm, cell.mean);
            else best_baseline = std::max(best_baseline, cell.mean);
        }
        if (best_osm >= 0.0 && best_baseline >= 0.0) {
            const double gap = best_osm - best_baseline;
            csv += std::string(source_name(config.compare.datasets[d])) + ",improvement," + format_double(gap) + "," +
                   format_double(gap) + "," + format_double(gap) + "\n";
        }
    }
    write_file(dir / "compare.csv", csv);
    out << "compare: " << n_losses * n_datasets << " cells x " << repeats << " seeds -> "
        << (dir / "compare.csv").string() << "\n";
}

void run_ocr_compare(const RunConfig& config, std::ostream& out) {
    const fs::path dir = ensure_out_dir(config);
    const int repeats = config.ocr.repeats;

    struct Cell {
        const char* model_name;
        int hidden;
        LossKind loss;
        double mean = 0.0;
        double lo = 0.0;
        double hi = 0.0;
    };
    std::vector<Cell> cells = {
        {"full", config.ocr.hidden_full, LossKind::ctc},
        {"full", config.ocr.hidden_full, LossKind::osm_ctc},
        {"scaled-down", config.ocr.hidden_scaled, LossKind::ctc},
        {"scaled-down", config.ocr.hidden_scaled, LossKind::osm_ctc},
    };

    run_cells(static_cast<int>(cells.size()), [&](int idx) {
        Cell& cell = cells[idx];
        ModelSpec spec;
        spec.kind = Model::Kind::mlp;
        spec.hidden_dim = cell.hidden;
        RunConfig cell_config = config;
        // Schedule follows the per-loss default unless pinned in the config.
        if (!config.schedule_pinned) {
            cell_config.train.schedule.kind = cell.loss == LossKind::ctc ? LrSchedule::Kind::exponential_decay
                                                                         : LrSchedule::Kind::cosine_warm_restart;
        }
        double sum = 0.0;
        double lo = 1.0;
        double hi = 0.0;
        for (int r = 0; r < repeats; ++r) {
            const TrainReport report = run_one_training(cell_config, cell.loss, DataSource::ocr_seq,
                                                        config.train.seed + static_cast<uint64_t>(r), spec);
            const double acc = final_eval_accuracy(report);
            sum += acc;
            lo = std::min(lo, acc);
            hi = std::max(hi, acc);
        }
        cell.mean = sum / repeats;
        cell.lo = lo;
        cell.hi = hi;
    });

    std::string csv = "# model,loss,exact_match_mean,exact_match_min,exact_match_max\n";
    for (const auto& cell : cells) {
        csv += std::string(cell.model_name) + "," + loss_kind_name(cell.loss) + "," + format_double(cell.mean) + "," +
               format_double(cell.lo) + "," + format_double(cell.hi) + "\n";
    }
    write_file(dir / "ocr.csv", csv);
    out << "ocr-compare: 4 cells x " << repeats << " seeds -> " << (dir / "ocr.csv").string() << "\n";
}

bool run_gradcheck(uint64_t seed, int count, std::ostream& out) {
    if (count <= 0) {
        out << "gradcheck: warning: count=" << count << ", no instances checked; trivially passing\n";
        return true;
    }
    const auto suites = gradient_suites(seed, count);
    bool all_ok = true;
    for (const auto& suite : suites) {
        out << "gradcheck: " << suite.name << ": max relative error " << format_double(suite.max_error)
            << " (tolerance " << format_double(suite.tolerance) << ", " << suite.instances << " instances) "
            << (suite.passed() ? "ok" : "FAIL") << "\n";
        all_ok = all_ok && suite.passed();
    }
    return all_ok;
}

}  // namespace osm
