#include "stamotion/binfile.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace stamotion {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'A', 'M', 'B', 'I', 'N', '1'};

void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw CorruptFileError("container truncated in header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f32_le(std::ostream& os, const std::vector<float>& v) {
    // Assumes little-endian IEEE-754 host; fine for every platform this
    // project targets.
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

}  // namespace

void write_container(const std::string& path, const BinContainer& c) {
    nlohmann::json manifest = c.meta;
    manifest["version"] = c.version;
    nlohmann::json sections = nlohmann::json::object();
    std::uint64_t offset = 0;  // in floats
    for (const auto& [name, sec] : c.sections) {
        check_contract(numel_of(sec.shape) == static_cast<long>(sec.data.size()),
                       "section '" + name + "' data does not match shape");
        sections[name] = {{"shape", sec.shape}, {"offset", offset}};
        offset += sec.data.size();
    }
    manifest["sections"] = sections;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open '" + path + "' for writing");
    os.write(kMagic, 8);
    const std::string json_text = manifest.dump();
    put_u64_le(os, json_text.size());
    os.write(json_text.data(), static_cast<std::streamsize>(json_text.size()));
    for (const auto& [name, sec] : c.sections) {
        (void)name;
        put_f32_le(os, sec.data);
    }
    if (!os) throw DataError("write failed for '" + path + "'");
}

BinContainer read_container(const std::string& path, const std::string& expected_version) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileMissingError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw CorruptFileError("'" + path + "' is not a stamotion container");
    const std::uint64_t json_len = get_u64_le(is);
    std::string json_text(json_len, '\0');
    is.read(json_text.data(), static_cast<std::streamsize>(json_len));
    if (!is) throw CorruptFileError("container truncated in manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFileError("bad container manifest: " + std::string(e.what()));
    }
    if (!manifest.contains("version") || !manifest["version"].is_string())
        throw CorruptFileError("container manifest lacks a version field");
    const std::string version = manifest["version"].get<std::string>();
    if (version != expected_version)
        throw VersionError("'" + path + "' has version '" + version + "', expected '" +
                           expected_version + "'");

    BinContainer out;
    out.version = version;
    if (!manifest.contains("sections") || !manifest["sections"].is_object())
        throw CorruptFileError("container manifest lacks sections");

    // Remaining payload.
    std::vector<float> payload;
    {
        is.seekg(0, std::ios::end);
        const std::streamoff end = is.tellg();
        const std::streamoff data_begin =
            static_cast<std::streamoff>(8 + 8 + json_len);
        if (end < data_begin) throw CorruptFileError("container truncated before payload");
        const std::streamoff bytes = end - data_begin;
        if (bytes % static_cast<std::streamoff>(sizeof(float)) != 0)
            throw CorruptFileError("payload size is not a whole number of float32 values");
        payload.resize(static_cast<std::size_t>(bytes / sizeof(float)));
        is.seekg(data_begin, std::ios::beg);
        is.read(reinterpret_cast<char*>(payload.data()), bytes);
        if (!is) throw CorruptFileError("container truncated in payload");
    }

    for (auto it = manifest["sections"].begin(); it != manifest["sections"].end(); ++it) {
        const auto& desc = it.value();
        if (!desc.contains("shape") || !desc.contains("offset"))
            throw CorruptFileError("section '" + it.key() + "' lacks shape/offset");
        BinSection sec;
        sec.shape = desc["shape"].get<std::vector<int>>();
        const std::uint64_t offset = desc["offset"].get<std::uint64_t>();
        const long count = numel_of(sec.shape);
        if (offset + static_cast<std::uint64_t>(count) > payload.size())
            throw CorruptFileError("section '" + it.key() + "' extends past payload end");
        sec.data.assign(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                        payload.begin() + static_cast<std::ptrdiff_t>(offset + count));
        out.sections.emplace(it.key(), std::move(sec));
    }
    manifest.erase("sections");
    manifest.erase("version");
    out.meta = std::move(manifest);
    return out;
}

}  // namespace stamotion
