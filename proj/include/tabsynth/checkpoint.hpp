#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabsynth/backend.hpp"

namespace tabsynth {

inline constexpr std::string_view kCheckpointMagic = "TABSYNTH-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

// Checkpoint layout:
//   line 1: magic
//   line 2: JSON header {format_version, backend, config, vocabulary, unk_policy}
//   rest:   backend state as length-prefixed little-endian arrays

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(const std::vector<double>& values);
    void u32_array(const std::vector<std::uint32_t>& values);

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::vector<double> f64_array();
    std::vector<std::uint32_t> u32_array();

private:
    std::istream& in_;
};

std::string checkpoint_bytes(const GenerativeBackend& backend);
void save_checkpoint(const GenerativeBackend& backend, const std::filesystem::path& path);

std::unique_ptr<GenerativeBackend> read_checkpoint(std::istream& in);
std::unique_ptr<GenerativeBackend> load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64 over arbitrary bytes, hex encoded. Used for provenance records.
std::string content_hash(std::string_view bytes);

}  // namespace tabsynth
