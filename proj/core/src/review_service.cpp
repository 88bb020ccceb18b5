#include "pedcloud/review_service.hpp"

#include <algorithm>
#include <chrono>
#include <httplib.h>

#include "json_codec.hpp"
#include "pedcloud/errors.hpp"
#include "pedcloud/model_io.hpp"

namespace pedcloud {

using detail::json;

ReviewStore::ReviewStore(std::filesystem::path manifest_path)
    : path_(std::move(manifest_path)), manifest_(load_manifest(path_)) {
    by_id_.resize(manifest_.entries.size());
    for (std::size_t i = 0; i < by_id_.size(); ++i) by_id_[i] = i;
    std::sort(by_id_.begin(), by_id_.end(), [&](std::size_t a, std::size_t b) {
        return manifest_.entries[a].cluster_id < manifest_.entries[b].cluster_id;
    });
}

ClusterPage ReviewStore::list_clusters(std::optional<ReviewStatus> status, std::size_t page,
                                       std::size_t page_size) const {
    std::shared_lock lock(mutex_);
    ClusterPage out;
    out.page = std::max<std::size_t>(page, 1);
    out.page_size = page_size;
    const std::size_t first = (out.page - 1) * page_size;
    for (std::size_t idx : by_id_) {
        const auto& e = manifest_.entries[idx];
        if (status && e.review != *status) continue;
        if (out.total >= first && out.items.size() < page_size) {
            out.items.push_back({e.cluster_id, e.label, e.scene_id, e.point_count, e.review});
        }
        ++out.total;
    }
    return out;
}

ClusterRecord ReviewStore::get_cluster(const std::string& cluster_id) const {
    ManifestEntry entry;
    {
        std::shared_lock lock(mutex_);
        const auto* e = manifest_.find(cluster_id);
        if (e == nullptr) throw NotFound("no cluster '" + cluster_id + "'");
        entry = *e;
    }
    auto cloud = load_point_cloud(resolve_entry_path(path_, entry));
    return {std::move(entry), std::move(cloud.points)};
}

StatusCounts ReviewStore::post_verdict(const Verdict& verdict) {
    std::lock_guard writer(writer_);
    ClusterManifest next;
    {
        std::shared_lock lock(mutex_);
        if (manifest_.find(verdict.cluster_id) == nullptr) throw NotFound("no cluster '" + verdict.cluster_id + "'");
        next = manifest_;
    }
    auto* e = next.find(verdict.cluster_id);
    e->review = verdict.decision == Decision::accepted ? ReviewStatus::accepted : ReviewStatus::rejected;
    e->reviewer = verdict.reviewer;
    e->reviewed_at = verdict.timestamp != 0
                         ? verdict.timestamp
                         : std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
    save_manifest(next, path_);
    {
        std::unique_lock lock(mutex_);
        manifest_ = std::move(next);
    }
    return stats();
}

StatusCounts ReviewStore::stats() const {
    std::shared_lock lock(mutex_);
    StatusCounts c;
    for (const auto& e : manifest_.entries) {
        switch (e.review) {
            case ReviewStatus::pending: ++c.pending; break;
            case ReviewStatus::accepted: ++c.accepted; break;
            case ReviewStatus::rejected: ++c.rejected; break;
        }
    }
    c.total = manifest_.entries.size();
    return c;
}

Decision parse_decision(const std::string& s) {
    if (s == "accepted") return Decision::accepted;
    if (s == "rejected") return Decision::rejected;
    throw InvalidDecision("decision must be 'accepted' or 'rejected', got '" + s + "'");
}

// --- HTTP ------------------------------------------------------------------

namespace {

json counts_json(const StatusCounts& c) {
    return {{"pending", c.pending}, {"accepted", c.accepted}, {"rejected", c.rejected}, {"total", c.total}};
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, json{{"error", message}});
}

std::size_t query_count(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const auto v = req.get_param_value(key);
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("bad integer");
    return static_cast<std::size_t>(n);
}

}  // namespace

struct ReviewServer::Impl {
    ReviewStore& store;
    httplib::Server server;
};

ReviewServer::ReviewServer(ReviewStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(new Impl{store, {}}) {
    auto& srv = impl_->server;
    auto& st = impl_->store;

    srv.Get("/api/stats", [&st](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, counts_json(st.stats()));
    });

    srv.Get("/api/clusters", [&st](const httplib::Request& req, httplib::Response& res) {
        std::optional<ReviewStatus> status;
        if (req.has_param("status") && !req.get_param_value("status").empty()) {
            status = parse_review_status(req.get_param_value("status"));
            if (!status) return reply_error(res, 400, "unknown status filter");
        }
        std::size_t page = 1;
        std::size_t page_size = 50;
        try {
            page = query_count(req, "page", 1);
            page_size = query_count(req, "page_size", 50);
        } catch (const std::exception&) {
            return reply_error(res, 400, "page and page_size must be integers");
        }
        if (page < 1 || page_size < 1) return reply_error(res, 400, "page and page_size must be >= 1");
        const auto p = st.list_clusters(status, page, page_size);
        json items = json::array();
        for (const auto& s : p.items) {
            items.push_back({{"cluster_id", s.cluster_id},
                             {"label", to_string(s.label)},
                             {"scene_id", s.scene_id},
                             {"point_count", s.point_count},
                             {"status", to_string(s.status)}});
        }
        reply(res, 200, {{"items", items}, {"total", p.total}, {"page", p.page}, {"page_size", p.page_size}});
    });

    srv.Get(R"(/api/clusters/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto rec = st.get_cluster(req.matches[1]);
            json j = detail::entry_to_json(rec.entry);
            j["points"] = detail::points_to_json(rec.points);
            reply(res, 200, j);
        } catch (const NotFound& e) {
            reply_error(res, 404, e.what());
        } catch (const Error& e) {
            reply_error(res, 500, e.what());
        }
    });

    srv.Post(R"(/api/clusters/([^/]+)/verdict)", [&st](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto body = json::parse(req.body);
            Verdict v;
            v.cluster_id = req.matches[1];
            v.decision = parse_decision(body.at("decision").get<std::string>());
            if (auto it = body.find("reviewer"); it != body.end()) v.reviewer = it->get<std::string>();
            reply(res, 200, counts_json(st.post_verdict(v)));
        } catch (const NotFound& e) {
            reply_error(res, 404, e.what());
        } catch (const InvalidDecision& e) {
            reply_error(res, 400, e.what());
        } catch (const json::exception& e) {
            reply_error(res, 400, std::string("bad verdict body: ") + e.what());
        } catch (const Error& e) {
            reply_error(res, 500, e.what());
        }
    });

    if (static_dir) srv.set_mount_point("/", static_dir->string());
}

ReviewServer::~ReviewServer() { stop(); }

bool ReviewServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int ReviewServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool ReviewServer::serve() { return impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
    if (impl_) impl_->server.stop();
}

void ReviewServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace pedcloud
