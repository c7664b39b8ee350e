#pragma once

// Shared on-disk container: 8-byte magic, little-endian u64 manifest
// length, JSON manifest, then one contiguous little-endian float32
// payload. The manifest carries a version string plus named sections with
// shapes and float offsets. Byte layout documented in docs/format.md.

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stamotion/common.hpp"

namespace stamotion {

struct BinSection {
    std::vector<int> shape;
    std::vector<float> data;
};

struct BinContainer {
    std::string version;
    nlohmann::json meta;  // free-form header fields
    std::map<std::string, BinSection> sections;

    const BinSection& section(const std::string& name) const {
        auto it = sections.find(name);
        if (it == sections.end()) throw CorruptFileError("missing section '" + name + "'");
        return it->second;
    }
    const BinSection& section_checked(const std::string& name,
                                      const std::vector<int>& shape) const {
        const BinSection& s = section(name);
        if (s.shape != shape)
            throw ShapeMismatchError("section '" + name + "' has shape " + shape_str(s.shape) +
                                     ", expected " + shape_str(shape));
        return s;
    }
};

void write_container(const std::string& path, const BinContainer& c);

// Throws FileMissingError / CorruptFileError / VersionError.
BinContainer read_container(const std::string& path, const std::string& expected_version);

}  // namespace stamotion
