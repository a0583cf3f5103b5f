#include "manifest.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace clocksync::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

void write_bytes(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

RunManifest::RunManifest(std::string subcommand, std::filesystem::path output_dir)
    : subcommand_(std::move(subcommand)), output_dir_(std::move(output_dir)) {
    std::filesystem::create_directories(output_dir_);
}

void RunManifest::emit_file(const std::string& name, std::string_view content) {
    write_bytes(output_dir_ / name, content);
    entries_.push_back({name, fnv1a64(content), content.size()});
}

void RunManifest::write() const {
    nlohmann::json j;
    j["subcommand"] = subcommand_;
    j["output_dir"] = output_dir_.string();
    if (!config_path_.empty()) j["config_path"] = config_path_.string();
    if (!seeds_.empty()) j["seeds"] = seeds_;
    auto files = nlohmann::json::array();
    for (const auto& e : entries_) {
        files.push_back({{"name", e.name}, {"fnv1a64", hex64(e.digest)}, {"bytes", e.bytes}});
    }
    j["files"] = files;
    write_bytes(output_dir_ / "manifest.json", j.dump(2) + "\n");
}

}  // namespace clocksync::cli
