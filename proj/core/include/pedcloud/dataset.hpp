#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

enum class StratifyField { label, source };

struct SplitSpec {
    std::vector<std::string> test_scenes;
    double train_fraction = 0.8;
    std::vector<StratifyField> stratify_by{StratifyField::label, StratifyField::source};
    std::uint64_t rng_seed = 0;
};

struct SplitOutcome {
    ClusterManifest manifest;
    std::vector<std::string> warnings;  // e.g. strata left with an empty train or val share
};

/// Clusters from test scenes go to test. Rejected clusters become
/// unassigned. The rest are split train/val per stratum with
/// round(n * train_fraction) train members, drawn by a seeded shuffle.
/// Throws UnknownScene when a test scene has no clusters.
SplitOutcome split_dataset(const ClusterManifest& manifest, const SplitSpec& spec);

struct ClassRegroup {
    std::vector<std::string> positive_classes;
    std::string name_positive = "positive";
    std::string name_negative = "negative";
};

struct ListingItem {
    std::string sample_id;
    std::string class_name;
};

/// One sample name per line. The class is the name up to its last '_'
/// when that suffix is numeric ("flower_pot_0012" -> "flower_pot"); an
/// explicit "<sample> <class>" pair per line is also accepted.
std::vector<ListingItem> parse_listing(std::string_view text);

struct BinaryItem {
    std::string sample_id;
    std::string class_name;
    bool positive = false;
};

struct BinarizeResult {
    std::vector<BinaryItem> items;
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;
};

/// Throws UnknownClass when a positive class is absent from the listing,
/// std::invalid_argument on an empty or duplicated positive list.
BinarizeResult binarize_classes(std::span<const ListingItem> listing, const ClassRegroup& regroup);

std::string write_binary_listing(const BinarizeResult& result, const ClassRegroup& regroup);

struct SplitCounts {
    Split split = Split::unassigned;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t manual = 0;
    std::size_t automatic = 0;
    std::size_t manual_positives = 0;
    double ratio = 0.0;  // positives / (positives + negatives), 0 when empty

    std::size_t total() const { return positives + negatives; }
};

struct RatioReport {
    std::vector<SplitCounts> per_split;  // train, val, test, unassigned
    SplitCounts overall;
};

RatioReport ratio_report(const ClusterManifest& manifest);

}  // namespace pedcloud
