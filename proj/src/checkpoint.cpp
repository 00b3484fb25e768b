#include "dmidas/checkpoint.hpp"

#include "dmidas/errors.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace dmidas {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'D', 'M', 'I', 'D', 'A', 'S', 'C', 'K'};

json block_to_json(const BlockConfig& b) {
    return json{{"basis", to_string(b.basis)},
                {"input_size", b.input_size},
                {"horizon", b.horizon},
                {"mlp_widths", b.mlp_widths},
                {"pool_kernel", b.pooling.kernel},
                {"pool_stride", b.pooling.stride},
                {"pool_mode", to_string(b.pooling.mode)},
                {"expressivity_ratio", b.expressivity_ratio},
                {"poly_degree", b.poly_degree},
                {"n_harmonics", b.n_harmonics}};
}

BlockConfig block_from_json(const json& j) {
    BlockConfig b;
    b.basis = parse_basis_kind(j.at("basis").get<std::string>());
    b.input_size = j.at("input_size").get<std::size_t>();
    b.horizon = j.at("horizon").get<std::size_t>();
    b.mlp_widths = j.at("mlp_widths").get<std::vector<std::size_t>>();
    b.pooling.kernel = j.at("pool_kernel").get<std::size_t>();
    b.pooling.stride = j.at("pool_stride").get<std::size_t>();
    b.pooling.mode = parse_pool_mode(j.at("pool_mode").get<std::string>());
    b.expressivity_ratio = j.at("expressivity_ratio").get<double>();
    b.poly_degree = j.at("poly_degree").get<std::size_t>();
    b.n_harmonics = j.at("n_harmonics").get<std::size_t>();
    return b;
}

json config_to_json(const ModelConfig& c) {
    json stacks = json::array();
    for (const auto& s : c.stacks) {
        stacks.push_back({{"n_blocks", s.n_blocks}, {"shared_weights", s.shared_weights},
                          {"block", block_to_json(s.block_template)}});
    }
    return json{{"architecture", c.architecture == Architecture::mlp ? "mlp" : "stacked"},
                {"input_size", c.input_size},
                {"horizon", c.horizon},
                {"base_ratio", c.base_ratio},
                {"ratio_schedule", c.ratio_schedule == RatioSchedule::exponential ? "exponential" : "per-block"},
                {"block_ratios", c.block_ratios},
                {"pooling_kernels", c.pooling_kernels},
                {"mlp_widths", c.mlp_widths},
                {"stacks", stacks}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    const auto arch = j.at("architecture").get<std::string>();
    if (arch != "mlp" && arch != "stacked") throw DataError("unknown architecture '" + arch + "'");
    c.architecture = arch == "mlp" ? Architecture::mlp : Architecture::stacked;
    c.input_size = j.at("input_size").get<std::size_t>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.base_ratio = j.at("base_ratio").get<double>();
    c.ratio_schedule = j.at("ratio_schedule").get<std::string>() == "exponential" ? RatioSchedule::exponential
                                                                                  : RatioSchedule::per_block_list;
    c.block_ratios = j.at("block_ratios").get<std::vector<double>>();
    c.pooling_kernels = j.at("pooling_kernels").get<std::vector<std::size_t>>();
    c.mlp_widths = j.at("mlp_widths").get<std::vector<std::size_t>>();
    for (const auto& s : j.at("stacks")) {
        StackConfig sc;
        sc.n_blocks = s.at("n_blocks").get<std::size_t>();
        sc.shared_weights = s.at("shared_weights").get<bool>();
        sc.block_template = block_from_json(s.at("block"));
        c.stacks.push_back(sc);
    }
    return c;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& where) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError(where + ": truncated checkpoint");
    return value;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_to_json(config).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
    try {
        return config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("model config: ") + e.what());
    }
}

void save_checkpoint(const TrainedMember& member, const std::filesystem::path& path) {
    json header;
    header["format_version"] = kCheckpointVersion;
    header["model"] = config_to_json(member.model.config());
    header["normalization"] = to_string(member.normalizer.mode);
    header["scales"] = member.normalizer.scales;
    header["seed"] = member.seed;
    header["best_val_mae"] = member.best_val_mae;
    header["best_iteration"] = member.best_iteration;
    json tensors = json::array();
    for (const auto& e : member.params.entries()) {
        tensors.push_back({{"name", e.name},
                           {"group", e.group},
                           {"role", e.role == ParamRole::weight ? "weight" : "bias"},
                           {"rows", e.value.rows()},
                           {"cols", e.value.cols()}});
    }
    header["tensors"] = tensors;
    const std::string text = header.dump();

    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kCheckpointVersion);
    write_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : member.params.entries()) {
        for (double v : e.value.values()) write_le<double>(out, v);
    }
    out.flush();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

TrainedMember load_checkpoint(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + where + "'");
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError(where + ": not a checkpoint file");
    const auto version = read_le<std::uint32_t>(in, where);
    if (version != kCheckpointVersion) {
        throw DataError(where + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto length = read_le<std::uint64_t>(in, where);
    if (length > (std::uint64_t{1} << 32)) throw DataError(where + ": implausible header length");
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw DataError(where + ": truncated checkpoint");

    try {
        const json header = json::parse(text);
        Model model(config_from_json(header.at("model")));
        ParameterStore params;
        model.register_parameters(params);
        Normalizer normalizer;
        normalizer.mode = parse_normalization_mode(header.at("normalization").get<std::string>());
        normalizer.scales = header.at("scales").get<std::map<std::string, double>>();

        const auto& tensors = header.at("tensors");
        if (tensors.size() != params.entries().size()) throw DataError(where + ": tensor count mismatch");
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            auto& e = params.entries()[i];
            const auto& t = tensors[i];
            if (t.at("name").get<std::string>() != e.name || t.at("rows").get<std::size_t>() != e.value.rows() ||
                t.at("cols").get<std::size_t>() != e.value.cols()) {
                throw DataError(where + ": tensor '" + t.at("name").get<std::string>() +
                                "' does not match the model layout");
            }
            for (auto& v : e.value.data()) v = read_le<double>(in, where);
        }
        if (in.peek() != std::char_traits<char>::eof()) throw DataError(where + ": trailing bytes after tensors");
        return TrainedMember{header.at("seed").get<std::uint64_t>(),
                             std::move(model),
                             std::move(params),
                             std::move(normalizer),
                             {},
                             header.at("best_val_mae").get<double>(),
                             header.at("best_iteration").get<std::size_t>()};
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed checkpoint header: " + e.what());
    } catch (const ConfigError& e) {
        throw DataError(where + ": invalid model in checkpoint: " + e.what());
    }
}

}  // namespace dmidas
