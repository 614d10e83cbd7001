#include "tagmap/acquisition.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"
#include "tagmap/io.hpp"
#include "tagmap/metrics.hpp"

namespace tagmap {

std::vector<ViewRequest> plan_views(const SamplePoint& point, unsigned k, const ViewOptions& opts) {
  if (k == 0) throw Error(ErrorCode::InvalidK, "k must be at least 1");
  if (!(opts.fov_deg > 0.0 && opts.fov_deg <= 120.0)) {
    throw Error(ErrorCode::InvalidArgument, "field of view must be in (0, 120]");
  }
  std::vector<ViewRequest> views;
  views.reserve(k);
  for (unsigned i = 0; i < k; ++i) {
    views.push_back({point.point_id, static_cast<double>(i) * 360.0 / static_cast<double>(k), opts.fov_deg,
                     opts.width_px, opts.height_px});
  }
  return views;
}

std::string make_image_id(std::string_view point_id, double heading_deg) {
  return hex64(fnv1a64(fmt::format("{}|{}", point_id, heading_deg)));
}

std::string_view to_string(ProviderKind p) {
  return p == ProviderKind::FirstParty ? "first_party" : "external";
}

std::string_view to_string(ImageStatus s) {
  switch (s) {
    case ImageStatus::Ok: return "ok";
    case ImageStatus::Unmapped: return "unmapped";
    case ImageStatus::Failed: return "failed";
  }
  return "failed";
}

void to_json(nlohmann::json& j, const ImageRecord& r) {
  j = nlohmann::json{{"image_id", r.image_id},
                     {"point_id", r.point_id},
                     {"heading_deg", r.heading_deg},
                     {"capture_year", r.capture_year ? nlohmann::json(*r.capture_year) : nlohmann::json(nullptr)},
                     {"provider", to_string(r.provider)},
                     {"width_px", r.width_px},
                     {"height_px", r.height_px},
                     {"storage_ref", r.storage_ref},
                     {"status", to_string(r.status)}};
}

void from_json(const nlohmann::json& j, ImageRecord& r) {
  r.image_id = j.at("image_id").get<std::string>();
  r.point_id = j.at("point_id").get<std::string>();
  r.heading_deg = j.at("heading_deg").get<double>();
  const auto& year = j.at("capture_year");
  r.capture_year = year.is_null() ? std::nullopt : std::optional<int>(year.get<int>());
  const auto provider = j.at("provider").get<std::string>();
  if (provider == "first_party") {
    r.provider = ProviderKind::FirstParty;
  } else if (provider == "external") {
    r.provider = ProviderKind::External;
  } else {
    throw Error(ErrorCode::ParseError, "unknown provider '" + provider + "'");
  }
  r.width_px = j.at("width_px").get<unsigned>();
  r.height_px = j.at("height_px").get<unsigned>();
  r.storage_ref = j.at("storage_ref").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  if (status == "ok") {
    r.status = ImageStatus::Ok;
  } else if (status == "unmapped") {
    r.status = ImageStatus::Unmapped;
  } else if (status == "failed") {
    r.status = ImageStatus::Failed;
  } else {
    throw Error(ErrorCode::ParseError, "unknown status '" + status + "'");
  }
}

Manifest Manifest::parse(const std::string& jsonl) {
  Manifest m;
  std::size_t line_no = 0;
  for (auto line : split_lines(jsonl)) {
    ++line_no;
    try {
      m.append(nlohmann::json::parse(line).get<ImageRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, fmt::format("manifest line {}: {}", line_no, e.what()));
    }
  }
  return m;
}

Manifest Manifest::open(const std::filesystem::path& path) {
  Manifest m = std::filesystem::exists(path) ? parse(read_file(path)) : Manifest{};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  m.sink_ = std::make_shared<std::ofstream>(path, std::ios::binary | std::ios::app);
  if (!*m.sink_) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
  m.path_ = path;
  return m;
}

void Manifest::append(ImageRecord record) {
  if (index_.contains(record.image_id)) {
    throw Error(ErrorCode::DuplicateRecord, "image_id " + record.image_id + " already in manifest");
  }
  if (record.status == ImageStatus::Ok &&
      (record.storage_ref.empty() || record.width_px == 0 || record.height_px == 0)) {
    throw Error(ErrorCode::InvalidArgument, "ok record " + record.image_id + " lacks storage or dimensions");
  }
  if (sink_) {
    *sink_ << nlohmann::json(record).dump() << '\n';
    sink_->flush();
    if (!*sink_) throw Error(ErrorCode::Io, "manifest write failed");
  }
  index_.emplace(record.image_id, records_.size());
  records_.push_back(std::move(record));
}

const ImageRecord* Manifest::find(std::string_view image_id) const {
  const auto it = index_.find(std::string(image_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::string Manifest::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) out += nlohmann::json(r).dump() + "\n";
  return out;
}

namespace {

struct Job {
  ViewRequest view;
  GeoPoint at;
};

ImageRecord failed_record(const ViewRequest& view, std::string image_id) {
  ImageRecord r;
  r.image_id = std::move(image_id);
  r.point_id = view.point_id;
  r.heading_deg = view.heading_deg;
  r.status = ImageStatus::Failed;
  return r;
}

}  // namespace

AcquireStats acquire(const SamplePlan& plan, ProviderClient& client, Manifest& store,
                     const AcquireOptions& opts) {
  SteadyClock steady;
  Clock& clock = opts.clock ? *opts.clock : steady;
  RateLimiter limiter(clock, opts.rate_per_s);

  AcquireStats stats;
  std::vector<Job> jobs;
  for (const auto& point : plan.points) {
    for (auto& view : plan_views(point, opts.k, opts.view)) {
      if (store.find(make_image_id(view.point_id, view.heading_deg))) {
        ++stats.reused;
      } else {
        jobs.push_back({std::move(view), point.location});
      }
    }
  }
  if (jobs.empty()) return stats;

  std::atomic<std::size_t> calls{0};
  auto fetch_with_retry = [&](const Job& job) {
    const std::string id = make_image_id(job.view.point_id, job.view.heading_deg);
    for (unsigned attempt = 0; attempt <= opts.max_retries; ++attempt) {
      limiter.acquire();
      ++calls;
      std::optional<ImageRecord> rec;
      try {
        rec = client.fetch(job.view, job.at);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ProviderAuth) throw;
      }
      if (rec && rec->status != ImageStatus::Failed) {
        rec->image_id = id;
        rec->point_id = job.view.point_id;
        rec->heading_deg = job.view.heading_deg;
        return *rec;
      }
      if (attempt < opts.max_retries) {
        clock.sleep_for(opts.backoff_base_s * std::pow(opts.backoff_factor, attempt));
      }
    }
    return failed_record(job.view, id);
  };

  // Workers fill slots; this thread is the single manifest writer and
  // commits slots in plan order.
  std::vector<std::optional<ImageRecord>> slots(jobs.size());
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;

  const unsigned n_workers = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(jobs.size())));
  std::vector<std::jthread> workers;
  workers.reserve(n_workers);
  for (unsigned w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      while (!abort.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) break;
        try {
          ImageRecord rec = fetch_with_retry(jobs[i]);
          std::lock_guard lock(mutex);
          slots[i] = std::move(rec);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!fatal) fatal = std::current_exception();
          abort.store(true);
        }
        ready.notify_all();
      }
    });
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::unique_lock lock(mutex);
    ready.wait(lock, [&] { return slots[i].has_value() || abort.load(); });
    if (!slots[i]) break;
    ImageRecord rec = std::move(*slots[i]);
    lock.unlock();
    if (rec.status == ImageStatus::Failed) {
      ++stats.failed;
    } else {
      ++stats.fetched;
    }
    store.append(std::move(rec));
  }
  abort.store(true);
  workers.clear();
  stats.client_calls = calls.load();
  if (fatal) std::rethrow_exception(fatal);
  return stats;
}

YearHistogram year_histogram(const Manifest& manifest) {
  YearHistogram h;
  for (const auto& r : manifest.records()) {
    if (r.status == ImageStatus::Ok) h.add(r.capture_year);
  }
  return h;
}

}  // namespace tagmap
