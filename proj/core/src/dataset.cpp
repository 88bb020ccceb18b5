#include "pedcloud/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "pedcloud/errors.hpp"

namespace pedcloud {

namespace {

std::string stratum_key(const ManifestEntry& e, std::span<const StratifyField> fields) {
    std::string key;
    for (auto f : fields) {
        if (!key.empty()) key += '/';
        key += f == StratifyField::label ? to_string(e.label) : to_string(e.source);
    }
    return key.empty() ? "all" : key;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

SplitOutcome split_dataset(const ClusterManifest& manifest, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie in (0, 1)");
    }
    std::set<std::string, std::less<>> scenes;
    for (const auto& e : manifest.entries) scenes.insert(e.scene_id);
    const std::set<std::string, std::less<>> test_scenes(spec.test_scenes.begin(), spec.test_scenes.end());
    for (const auto& s : test_scenes) {
        if (!scenes.contains(s)) throw UnknownScene("test scene '" + s + "' has no clusters in the manifest");
    }

    SplitOutcome out{manifest, {}};
    std::map<std::string, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < out.manifest.entries.size(); ++i) {
        auto& e = out.manifest.entries[i];
        if (e.review == ReviewStatus::rejected) {
            e.split = Split::unassigned;
        } else if (test_scenes.contains(e.scene_id)) {
            e.split = Split::test;
        } else {
            strata[stratum_key(e, spec.stratify_by)].push_back(i);
        }
    }

    std::mt19937_64 rng(spec.rng_seed);
    for (auto& [key, members] : strata) {
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_train = static_cast<std::size_t>(
            std::llround(static_cast<double>(members.size()) * spec.train_fraction));
        for (std::size_t k = 0; k < members.size(); ++k) {
            out.manifest.entries[members[k]].split = k < n_train ? Split::train : Split::val;
        }
        if (n_train == 0 || n_train == members.size()) {
            out.warnings.push_back("EmptyStratum: stratum '" + key + "' (" + std::to_string(members.size()) +
                                   " clusters) has an empty " + (n_train == 0 ? "train" : "val") + " share");
        }
    }
    return out;
}

std::vector<ListingItem> parse_listing(std::string_view text) {
    std::vector<ListingItem> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;

        const auto ws = line.find_first_of(" \t");
        if (ws != std::string_view::npos) {
            out.push_back({std::string(trim(line.substr(0, ws))), std::string(trim(line.substr(ws)))});
            continue;
        }
        const auto us = line.rfind('_');
        const bool numeric_suffix =
            us != std::string_view::npos && us + 1 < line.size() &&
            std::all_of(line.begin() + static_cast<std::ptrdiff_t>(us) + 1, line.end(),
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        if (!numeric_suffix || us == 0) {
            throw ParseError("listing line '" + std::string(line) + "' has no class prefix");
        }
        out.push_back({std::string(line), std::string(line.substr(0, us))});
    }
    return out;
}

BinarizeResult binarize_classes(std::span<const ListingItem> listing, const ClassRegroup& regroup) {
    if (regroup.positive_classes.empty()) throw std::invalid_argument("positive class list is empty");
    const std::set<std::string, std::less<>> positives(regroup.positive_classes.begin(),
                                                        regroup.positive_classes.end());
    if (positives.size() != regroup.positive_classes.size()) {
        throw std::invalid_argument("positive class list has duplicates");
    }
    std::set<std::string, std::less<>> present;
    for (const auto& item : listing) present.insert(item.class_name);
    for (const auto& p : positives) {
        if (!present.contains(p)) throw UnknownClass("class '" + p + "' does not occur in the listing");
    }

    BinarizeResult r;
    r.items.reserve(listing.size());
    for (const auto& item : listing) {
        const bool pos = positives.contains(item.class_name);
        r.items.push_back({item.sample_id, item.class_name, pos});
        ++(pos ? r.positive_count : r.negative_count);
    }
    return r;
}

std::string write_binary_listing(const BinarizeResult& result, const ClassRegroup& regroup) {
    std::string out;
    for (const auto& item : result.items) {
        out += item.sample_id;
        out += ' ';
        out += item.positive ? regroup.name_positive : regroup.name_negative;
        out += '\n';
    }
    return out;
}

RatioReport ratio_report(const ClusterManifest& manifest) {
    RatioReport r;
    for (auto s : {Split::train, Split::val, Split::test, Split::unassigned}) {
        r.per_split.push_back({});
        r.per_split.back().split = s;
    }
    auto add = [](SplitCounts& c, const ManifestEntry& e) {
        const bool pos = e.label == ClusterLabel::pedestrian;
        ++(pos ? c.positives : c.negatives);
        if (e.source == ClusterSource::manual) {
            ++c.manual;
            if (pos) ++c.manual_positives;
        } else {
            ++c.automatic;
        }
    };
    for (const auto& e : manifest.entries) {
        add(r.per_split[static_cast<std::size_t>(e.split)], e);
        add(r.overall, e);
    }
    auto finish = [](SplitCounts& c) {
        c.ratio = c.total() == 0 ? 0.0 : static_cast<double>(c.positives) / static_cast<double>(c.total());
    };
    for (auto& c : r.per_split) finish(c);
    finish(r.overall);
    return r;
}

}  // namespace pedcloud
