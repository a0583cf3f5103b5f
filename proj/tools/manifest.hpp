#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace clocksync::cli {

/// FNV-1a over the raw bytes; the digest recorded for every emitted file.
std::uint64_t fnv1a64(std::string_view bytes);

/// Record of one run: what was asked for and every file written with its
/// content digest, so a result directory is self-describing.
class RunManifest {
   public:
    RunManifest(std::string subcommand, std::filesystem::path output_dir);

    void set_config_path(std::filesystem::path p) { config_path_ = std::move(p); }
    void set_seeds(std::vector<std::uint64_t> seeds) { seeds_ = std::move(seeds); }

    /// Writes the file under the output directory and records its digest.
    void emit_file(const std::string& name, std::string_view content);

    /// Serializes the manifest itself as manifest.json in the output
    /// directory. Call last; the manifest does not list itself.
    void write() const;

    const std::filesystem::path& output_dir() const { return output_dir_; }

    struct Entry {
        std::string name;
        std::uint64_t digest;
        std::size_t bytes;
    };
    const std::vector<Entry>& entries() const { return entries_; }

   private:
    std::string subcommand_;
    std::filesystem::path output_dir_;
    std::filesystem::path config_path_;
    std::vector<std::uint64_t> seeds_;
    std::vector<Entry> entries_;
};

}  // namespace clocksync::cli
