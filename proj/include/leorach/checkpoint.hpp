#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "leorach/nn.hpp"

namespace leorach {

// Flat container: segment name -> network. std::map keeps file output in a
// stable order. Values are written as C99 hex floats, so a load followed by a
// save reproduces the file byte for byte.
using SegmentMap = std::map<std::string, DenseNet>;

void save_checkpoint(const std::filesystem::path& path, const SegmentMap& segments);
SegmentMap load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const SegmentMap& segments);
SegmentMap parse_checkpoint(const std::string& text);

}  // namespace leorach
