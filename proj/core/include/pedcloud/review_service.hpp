#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

enum class Decision { accepted, rejected };

struct Verdict {
    std::string cluster_id;
    Decision decision = Decision::accepted;
    std::string reviewer;
    std::int64_t timestamp = 0;  // UTC seconds; 0 means "now"
};

struct StatusCounts {
    std::size_t pending = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t total = 0;

    friend bool operator==(const StatusCounts&, const StatusCounts&) = default;
};

struct ClusterSummary {
    std::string cluster_id;
    ClusterLabel label = ClusterLabel::pedestrian;
    std::string scene_id;
    std::size_t point_count = 0;
    ReviewStatus status = ReviewStatus::pending;
};

struct ClusterPage {
    std::vector<ClusterSummary> items;
    std::size_t total = 0;  // matching the filter, across all pages
    std::size_t page = 1;
    std::size_t page_size = 0;
};

struct ClusterRecord {
    ManifestEntry entry;
    std::vector<Point3> points;
};

/// The manifest behind the review loop. Readers run concurrently; verdicts
/// are serialized and each one rewrites the manifest file atomically.
class ReviewStore {
public:
    explicit ReviewStore(std::filesystem::path manifest_path);

    /// Ordered by cluster_id; `page` is 1-based.
    ClusterPage list_clusters(std::optional<ReviewStatus> status, std::size_t page, std::size_t page_size) const;

    /// Throws NotFound.
    ClusterRecord get_cluster(const std::string& cluster_id) const;

    /// Latest verdict wins. Throws NotFound; the manifest is untouched then.
    StatusCounts post_verdict(const Verdict& verdict);

    StatusCounts stats() const;

    const std::filesystem::path& manifest_path() const { return path_; }

private:
    std::filesystem::path path_;
    ClusterManifest manifest_;
    std::vector<std::size_t> by_id_;  // entry indices sorted by cluster_id
    mutable std::shared_mutex mutex_;
    std::mutex writer_;
};

Decision parse_decision(const std::string& s);  // throws InvalidDecision

/// HTTP/JSON front end:
///   GET  /api/clusters?status=&page=&page_size=
///   GET  /api/clusters/{id}
///   POST /api/clusters/{id}/verdict   {"decision", "reviewer"}
///   GET  /api/stats
/// plus static files from `static_dir` when given.
class ReviewServer {
public:
    explicit ReviewServer(ReviewStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    /// Blocks until stop(). Returns false when the port cannot be bound.
    bool listen(const std::string& host, int port);

    /// Binds an ephemeral port and returns it (or -1); call serve() next.
    int bind_any_port(const std::string& host);
    bool serve();

    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pedcloud
