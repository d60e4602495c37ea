#include "soupkit/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "soupkit/errors.hpp"

namespace soupkit {

namespace {

constexpr char kMagic[4] = {'S', 'O', 'U', 'P'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

nlohmann::ordered_json meta_to_json(const CheckpointMeta& meta) {
    nlohmann::ordered_json j;
    j["seed"] = meta.seed;
    if (meta.dev_loss) j["dev_loss"] = *meta.dev_loss;
    j["model_spec_id"] = meta.model_spec_id;
    nlohmann::ordered_json labels;
    for (const auto& [name, value] : meta.label_map) labels[name] = value;
    j["label_map"] = std::move(labels);
    j["created_at"] = meta.created_at;
    if (meta.soup) {
        nlohmann::ordered_json members = nlohmann::ordered_json::array();
        for (const SoupMemberInfo& m : *meta.soup) {
            nlohmann::ordered_json row;
            row["seed"] = m.seed;
            if (m.dev_loss) row["dev_loss"] = *m.dev_loss;
            row["weight"] = m.weight;
            members.push_back(std::move(row));
        }
        j["soup"] = nlohmann::ordered_json{{"members", std::move(members)}};
    }
    return j;
}

CheckpointMeta meta_from_json(const nlohmann::ordered_json& j) {
    CheckpointMeta meta;
    meta.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dev_loss")) {
        meta.dev_loss = j.at("dev_loss").get<double>();
        if (!(*meta.dev_loss >= 0.0)) throw FormatError("dev_loss must be nonnegative");
    }
    meta.model_spec_id = j.at("model_spec_id").get<std::string>();
    meta.label_map.clear();
    for (const auto& [name, value] : j.at("label_map").items()) {
        meta.label_map[name] = value.get<int>();
    }
    if (meta.label_map.size() != 2) {
        throw FormatError("label_map must have exactly two classes");
    }
    int seen[2] = {0, 0};
    for (const auto& [name, value] : meta.label_map) {
        if (value != 0 && value != 1) throw FormatError("label_map values must be 0 or 1");
        seen[value]++;
    }
    if (seen[0] != 1 || seen[1] != 1) {
        throw FormatError("label_map must be a bijection onto {0,1}");
    }
    meta.created_at = j.at("created_at").get<std::string>();
    if (j.contains("soup")) {
        std::vector<SoupMemberInfo> members;
        for (const auto& row : j.at("soup").at("members")) {
            SoupMemberInfo m;
            m.seed = row.at("seed").get<std::uint64_t>();
            if (row.contains("dev_loss")) m.dev_loss = row.at("dev_loss").get<double>();
            m.weight = row.at("weight").get<double>();
            members.push_back(std::move(m));
        }
        meta.soup = std::move(members);
    }
    return meta;
}

void read_exact(std::istream& src, char* buf, std::size_t n, const char* what) {
    src.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(src.gcount()) != n) {
        throw LengthError(std::string("truncated checkpoint: short read in ") + what);
    }
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& dest) {
    nlohmann::ordered_json header;
    nlohmann::ordered_json arch = nlohmann::ordered_json::array();
    for (const TensorEntry& t : ckpt.tensors) {
        nlohmann::ordered_json row;
        row["name"] = t.name;
        row["dtype"] = "f32";
        row["shape"] = t.shape;
        arch.push_back(std::move(row));
    }
    header["arch"] = std::move(arch);
    header["meta"] = meta_to_json(ckpt.meta);
    const std::string payload = header.dump();

    std::string prefix;
    prefix.reserve(16 + payload.size());
    prefix.append(kMagic, sizeof(kMagic));
    put_u32_le(prefix, kFormatVersion);
    put_u64_le(prefix, payload.size());
    prefix += payload;
    dest.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));

    std::string buf;
    for (const TensorEntry& t : ckpt.tensors) {
        if constexpr (std::endian::native == std::endian::little) {
            dest.write(reinterpret_cast<const char*>(t.values.data()),
                       static_cast<std::streamsize>(t.values.size() * sizeof(float)));
        } else {
            buf.clear();
            buf.reserve(t.values.size() * sizeof(float));
            for (float v : t.values) put_u32_le(buf, std::bit_cast<std::uint32_t>(v));
            dest.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        }
    }
    if (!dest) {
        throw IoError("failed writing checkpoint stream");
    }
}

Checkpoint read_checkpoint(std::istream& src) {
    char head[16];
    read_exact(src, head, sizeof(head), "header");
    if (std::memcmp(head, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("bad checkpoint magic");
    }
    const auto* uhead = reinterpret_cast<const unsigned char*>(head);
    const std::uint32_t version = get_u32_le(uhead + 4);
    if (version != kFormatVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint64_t meta_len = get_u64_le(uhead + 8);
    std::string payload(meta_len, '\0');
    read_exact(src, payload.data(), meta_len, "metadata");

    nlohmann::ordered_json header;
    try {
        header = nlohmann::ordered_json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint metadata JSON: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.meta = meta_from_json(header.at("meta"));
        for (const auto& row : header.at("arch")) {
            const std::string name = row.at("name").get<std::string>();
            const std::string dtype = row.at("dtype").get<std::string>();
            if (dtype != "f32") {
                throw FormatError("unsupported dtype '" + dtype + "' for tensor " + name);
            }
            const auto shape = row.at("shape").get<std::vector<std::size_t>>();
            std::size_t count = 1;
            for (std::size_t d : shape) {
                if (d == 0) throw FormatError("zero dimension in tensor " + name);
                count *= d;
            }
            std::vector<float> values(count);
            if constexpr (std::endian::native == std::endian::little) {
                read_exact(src, reinterpret_cast<char*>(values.data()), count * sizeof(float),
                           "tensor payload");
            } else {
                std::vector<char> raw(count * sizeof(float));
                read_exact(src, raw.data(), raw.size(), "tensor payload");
                for (std::size_t i = 0; i < count; ++i) {
                    values[i] = std::bit_cast<float>(
                        get_u32_le(reinterpret_cast<const unsigned char*>(raw.data()) + 4 * i));
                }
            }
            for (float v : values) {
                if (!std::isfinite(v)) {
                    throw ValidityError("tensor '" + name + "' contains a non-finite value");
                }
            }
            ckpt.tensors.add(name, shape, std::move(values));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad checkpoint metadata: ") + e.what());
    } catch (const DomainError& e) {
        throw FormatError(std::string("bad checkpoint arch: ") + e.what());
    }

    if (src.peek() != std::char_traits<char>::eof()) {
        throw FormatError("trailing bytes after checkpoint payload");
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    write_checkpoint(ckpt, out);
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path.string());
    }
    return read_checkpoint(in);
}

}  // namespace soupkit
