#include "tabsynth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tabsynth/error.hpp"
#include "tabsynth/neural.hpp"
#include "tabsynth/ngram.hpp"
#include "tabsynth/table.hpp"

namespace tabsynth {

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
        throw Error(ErrorKind::data, "checkpoint is truncated");
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(bytes[i]) << (8 * i);
    }
    return value;
}

// Upper bound on array lengths read from disk, so a corrupt prefix cannot
// trigger a huge allocation.
constexpr std::uint64_t kMaxArray = std::uint64_t{1} << 32;

}  // namespace

void BinaryWriter::u32(std::uint32_t v) {
    put_le(out_, v);
}

void BinaryWriter::u64(std::uint64_t v) {
    put_le(out_, v);
}

void BinaryWriter::f64(double v) {
    put_le(out_, std::bit_cast<std::uint64_t>(v));
}

void BinaryWriter::f64_array(const std::vector<double>& values) {
    u64(values.size());
    for (double v : values) {
        f64(v);
    }
}

void BinaryWriter::u32_array(const std::vector<std::uint32_t>& values) {
    u64(values.size());
    for (auto v : values) {
        u32(v);
    }
}

std::uint32_t BinaryReader::u32() {
    return get_le<std::uint32_t>(in_);
}

std::uint64_t BinaryReader::u64() {
    return get_le<std::uint64_t>(in_);
}

double BinaryReader::f64() {
    return std::bit_cast<double>(get_le<std::uint64_t>(in_));
}

std::vector<double> BinaryReader::f64_array() {
    const std::uint64_t n = u64();
    if (n > kMaxArray) {
        throw Error(ErrorKind::data, "checkpoint array length is implausible");
    }
    std::vector<double> values(n);
    for (auto& v : values) {
        v = f64();
    }
    return values;
}

std::vector<std::uint32_t> BinaryReader::u32_array() {
    const std::uint64_t n = u64();
    if (n > kMaxArray) {
        throw Error(ErrorKind::data, "checkpoint array length is implausible");
    }
    std::vector<std::uint32_t> values(n);
    for (auto& v : values) {
        v = u32();
    }
    return values;
}

std::string checkpoint_bytes(const GenerativeBackend& backend) {
    nlohmann::json header = {
        {"format_version", kCheckpointVersion},
        {"backend", std::string(backend.kind())},
        {"config", backend.describe()},
        {"vocabulary", backend.vocabulary().tokens()},
        {"unk_policy", backend.kind() == "ngram" ? "append" : "map-to-unk"},
    };
    std::ostringstream out(std::ios::binary);
    out << kCheckpointMagic << '\n' << header.dump() << '\n';
    backend.write_state(out);
    return out.str();
}

void save_checkpoint(const GenerativeBackend& backend, const std::filesystem::path& path) {
    write_text_atomic(path, checkpoint_bytes(backend));
}

std::unique_ptr<GenerativeBackend> read_checkpoint(std::istream& in) {
    std::string magic;
    if (!std::getline(in, magic) || magic != kCheckpointMagic) {
        throw Error(ErrorKind::data, "not a checkpoint file");
    }
    std::string headerLine;
    if (!std::getline(in, headerLine)) {
        throw Error(ErrorKind::data, "checkpoint header is missing");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(headerLine);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::data, std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    try {
        const int version = header.at("format_version").get<int>();
        if (version != kCheckpointVersion) {
            throw Error(ErrorKind::version, "checkpoint format version " + std::to_string(version) +
                                                " is not supported (expected " +
                                                std::to_string(kCheckpointVersion) + ")");
        }
        const auto kind = header.at("backend").get<std::string>();
        if (kind == "ngram") {
            return NgramModel::read(header, in);
        }
        if (kind == "neural") {
            return TinyNeuralLM::read(header, in);
        }
        throw Error(ErrorKind::data, "unknown checkpoint backend '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::data, std::string("malformed checkpoint header: ") + e.what());
    }
}

std::unique_ptr<GenerativeBackend> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
    }
    return read_checkpoint(in);
}

std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace tabsynth
