#include "drsam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "drsam/image_io.hpp"

namespace drsam {

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw ValidationError("iou: dimension mismatch");
    std::size_t inter = 0;
    std::size_t uni = 0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const bool x = da[i] != 0;
        const bool y = db[i] != 0;
        inter += (x && y) ? 1 : 0;
        uni += (x || y) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

MatchCounts match_anomalies(const std::vector<AnomalyFinding>& predicted,
                            const std::vector<LabeledAnomaly>& labeled, double tolRadius) {
    if (!(tolRadius > 0.0)) throw ValidationError("tolRadius must be positive");
    std::vector<std::tuple<long long, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        for (std::size_t j = 0; j < labeled.size(); ++j) {
            if (predicted[i].kind != labeled[j].kind) continue;
            const long long d2 = squared_distance(predicted[i].pixel, labeled[j].pixel);
            if (static_cast<double>(d2) <= tolRadius * tolRadius) pairs.emplace_back(d2, i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> used_pred(predicted.size(), false);
    std::vector<bool> used_label(labeled.size(), false);
    MatchCounts out;
    for (const auto& [d2, i, j] : pairs) {
        if (used_pred[i] || used_label[j]) continue;
        used_pred[i] = used_label[j] = true;
        ++out.tp;
    }
    out.fp = static_cast<int>(predicted.size()) - out.tp;
    out.fn = static_cast<int>(labeled.size()) - out.tp;
    return out;
}

nlohmann::json to_json(const BoundingBox& box) {
    return {{"x0", box.x0}, {"y0", box.y0}, {"x1", box.x1}, {"y1", box.y1}};
}

BoundingBox box_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("bounding box must be a JSON object");
    BoundingBox box;
    for (auto [key, field] : {std::pair{"x0", &box.x0}, std::pair{"y0", &box.y0},
                              std::pair{"x1", &box.x1}, std::pair{"y1", &box.y1}}) {
        if (!j.contains(key) || !j[key].is_number_integer()) {
            throw ValidationError(std::string("bounding box field '") + key + "' must be an integer");
        }
        *field = j[key].get<int>();
    }
    return box;
}

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& root) {
    const auto boxes = read_json(root / "boxes.json");
    nlohmann::json anomalies = nlohmann::json::object();
    if (std::filesystem::exists(root / "anomalies.json")) anomalies = read_json(root / "anomalies.json");
    if (!boxes.is_object()) throw ValidationError("boxes.json must map image ids to box lists");

    std::vector<DatasetRecord> records;
    for (const auto& [id, list] : boxes.items()) {
        DatasetRecord r;
        r.imageId = id;
        r.imagePath = root / "images" / (id + ".png");
        r.maskPath = root / "masks" / (id + ".png");
        if (!list.is_array()) throw ValidationError("boxes for '" + id + "' must be a list");
        for (const auto& b : list) r.boxes.push_back(box_from_json(b));
        if (anomalies.contains(id)) {
            for (const auto& a : anomalies[id]) {
                if (!a.contains("x") || !a.contains("y") || !a.contains("kind")) {
                    throw ValidationError("anomaly labels need x, y and kind");
                }
                r.labeledAnomalies.push_back(
                    {{a["x"].get<int>(), a["y"].get<int>()}, anomaly_kind_from_string(a["kind"].get<std::string>())});
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_dataset(const std::filesystem::path& root, const std::string& imageId,
                   const GrayscaleImage& image, const BinaryMask& mask,
                   const std::vector<BoundingBox>& boxes,
                   const std::vector<LabeledAnomaly>& anomalies) {
    std::filesystem::create_directories(root / "images");
    std::filesystem::create_directories(root / "masks");
    write_gray(root / "images" / (imageId + ".png"), image);
    write_mask(root / "masks" / (imageId + ".png"), mask);

    auto update = [&](const std::string& name, nlohmann::json value) {
        const auto path = root / name;
        nlohmann::json doc = std::filesystem::exists(path) ? read_json(path) : nlohmann::json::object();
        doc[imageId] = std::move(value);
        write_json(path, doc);
    };
    nlohmann::json box_list = nlohmann::json::array();
    for (const auto& b : boxes) box_list.push_back(to_json(b));
    update("boxes.json", box_list);
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& a : anomalies) {
        labels.push_back({{"x", a.pixel.x}, {"y", a.pixel.y}, {"kind", to_string(a.kind)}});
    }
    update("anomalies.json", labels);
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& key) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (const unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed ^ h;  // splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace {

struct RecordOutcome {
    double imageIoU = 0.0;
    std::vector<double> boxIoU;
    MatchCounts matches;
    std::string failure;
};

RecordOutcome evaluate_record(const DatasetRecord& record, SegmentationBackend& backend,
                              const BenchmarkOptions& options, const PipelineConfig& cfg) {
    RecordOutcome out;
    const GrayscaleImage image = read_gray(record.imagePath);
    const BinaryMask truth = read_mask(record.maskPath);
    if (!truth.same_shape(image)) throw ValidationError("mask and image dimensions differ");

    Rng rng(derive_seed(cfg.rngSeed, record.imageId));
    std::vector<BinaryMask> box_masks;
    for (const auto& box : record.boxes) {
        validate_box(box, image.width(), image.height());
        BinaryMask mask;
        try {
            mask = segment_box(backend, options.strategy, image, record.imageId, box, cfg, rng).mask;
        } catch (const NoCandidatesError&) {
            // Nothing vessel-like in the box: the prediction for it is empty.
            mask = BinaryMask(image.width(), image.height());
        }
        out.boxIoU.push_back(iou(mask, clamp_to_box(truth, box)));
        box_masks.push_back(std::move(mask));
    }
    const BinaryMask predicted = box_masks.empty() ? BinaryMask(image.width(), image.height())
                                                   : union_masks(box_masks);
    out.imageIoU = iou(predicted, truth);
    out.matches = match_anomalies(detect(predicted, cfg), record.labeledAnomalies, options.tolRadius);
    return out;
}

}  // namespace

EvalReport run_benchmark(const std::vector<DatasetRecord>& dataset, SegmentationBackend& backend,
                         const BenchmarkOptions& options, const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<RecordOutcome> outcomes(dataset.size());
    std::size_t next = 0;
    std::mutex next_lock;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(next_lock);
                if (next >= dataset.size()) return;
                i = next++;
            }
            try {
                outcomes[i] = evaluate_record(dataset[i], backend, options, cfg);
            } catch (const std::exception& e) {
                outcomes[i] = RecordOutcome{};
                outcomes[i].failure = e.what();
            }
        }
    };
    const int workers = std::clamp(options.workers, 1, 64);
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    EvalReport report;
    report.strategy = to_string(options.strategy);
    report.backend = backend.info().name;
    report.config = cfg;
    double box_sum = 0.0;
    std::size_t box_count = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& id = dataset[i].imageId;
        const auto& o = outcomes[i];
        if (!o.failure.empty()) {
            report.failures[id] = o.failure;
            continue;
        }
        report.perImageIoU[id] = o.imageIoU;
        report.perBoxIoU[id] = o.boxIoU;
        for (const double v : o.boxIoU) {
            box_sum += v;
            ++box_count;
        }
        report.anomalies.tp += o.matches.tp;
        report.anomalies.fp += o.matches.fp;
        report.anomalies.fn += o.matches.fn;
    }
    double sum = 0.0;
    for (const auto& [id, v] : report.perImageIoU) sum += v;
    report.meanIoU = report.perImageIoU.empty() ? 0.0 : sum / static_cast<double>(report.perImageIoU.size());
    report.meanBoxIoU = box_count == 0 ? 0.0 : box_sum / static_cast<double>(box_count);
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    return {{"strategy", report.strategy},
            {"backend", report.backend},
            {"mean_iou", report.meanIoU},
            {"mean_box_iou", report.meanBoxIoU},
            {"per_image_iou", report.perImageIoU},
            {"per_box_iou", report.perBoxIoU},
            {"anomalies", {{"tp", report.anomalies.tp}, {"fp", report.anomalies.fp}, {"fn", report.anomalies.fn}}},
            {"failures", report.failures},
            {"config", to_json(report.config)}};
}

std::string format_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "Method" << std::setw(13) << "Backend" << std::right
        << std::setw(7) << "Images" << std::setw(12) << "MIoU(image)" << std::setw(11)
        << "MIoU(box)" << std::setw(6) << "TP" << std::setw(6) << "FP" << std::setw(6) << "FN"
        << std::setw(9) << "Failed" << "\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& r : reports) {
        out << std::left << std::setw(10) << r.strategy << std::setw(13) << r.backend << std::right
            << std::setw(7) << r.perImageIoU.size() << std::setw(12) << r.meanIoU << std::setw(11)
            << r.meanBoxIoU << std::setw(6) << r.anomalies.tp << std::setw(6) << r.anomalies.fp
            << std::setw(6) << r.anomalies.fn << std::setw(9) << r.failures.size() << "\n";
    }
    return out.str();
}

}  // namespace drsam
