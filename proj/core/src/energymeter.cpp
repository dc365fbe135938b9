#include "joulebench/energymeter.hpp"

#include <time.h>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "joulebench/errors.hpp"

namespace joulebench {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::optional<std::string> read_small_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return trim(ss.str());
}

std::uint64_t parse_u64(const std::string& text, const fs::path& path) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
    throw MeterError(path.string() + ": expected a decimal integer, got '" + text + "'");
  }
  return v;
}

/// Indices of an `intel-rapl:<i>[:<j>]` directory name; empty when it does not match.
std::vector<int> rapl_indices(const std::string& name) {
  constexpr std::string_view prefix = "intel-rapl:";
  if (!std::string_view(name).starts_with(prefix)) return {};
  std::vector<int> out;
  std::string_view rest = std::string_view(name).substr(prefix.size());
  while (true) {
    int v = 0;
    auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (ec != std::errc{} || p == rest.data()) return {};
    out.push_back(v);
    rest.remove_prefix(static_cast<std::size_t>(p - rest.data()));
    if (rest.empty()) return out;
    if (rest.front() != ':') return {};
    rest.remove_prefix(1);
  }
}

std::vector<std::pair<std::vector<int>, fs::path>> rapl_children(const fs::path& dir,
                                                                  std::size_t depth) {
  std::vector<std::pair<std::vector<int>, fs::path>> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    auto idx = rapl_indices(entry.path().filename().string());
    if (idx.size() == depth && fs::is_directory(entry.path(), ec)) {
      out.emplace_back(std::move(idx), entry.path());
    }
  }
  std::ranges::sort(out);
  return out;
}

RaplDomain load_domain(const fs::path& dir) {
  RaplDomain d;
  d.name = read_small_file(dir / "name").value_or(dir.filename().string());
  const auto range_path = dir / "max_energy_range_uj";
  const auto range = read_small_file(range_path);
  if (!range) throw MeterError("cannot read " + range_path.string());
  d.max_range_uj = parse_u64(*range, range_path);
  if (d.max_range_uj == 0) throw MeterError(range_path.string() + ": modulus must be > 0");
  d.energy_path = dir / "energy_uj";
  d.read_uj();  // unreadable counters are reported at discovery time
  return d;
}

}  // namespace

std::string_view to_string(EnergyMethod method) {
  switch (method) {
    case EnergyMethod::Rapl: return "rapl";
    case EnergyMethod::Trace: return "trace";
    case EnergyMethod::Proxy: return "proxy";
    case EnergyMethod::None: return "none";
  }
  return "?";
}

EnergyMethod parse_energy_method(std::string_view s) {
  for (auto m : {EnergyMethod::Rapl, EnergyMethod::Trace, EnergyMethod::Proxy, EnergyMethod::None}) {
    if (to_string(m) == s) return m;
  }
  throw SpecError("unknown energy method '" + std::string(s) + "' (rapl, trace, proxy, none)");
}

std::uint64_t RaplDomain::read_uj() const {
  const auto text = read_small_file(energy_path);
  if (!text) {
    throw MeterError("cannot read " + energy_path.string() +
                     " (powercap counters often require root; see `joulebench doctor`)");
  }
  const auto v = parse_u64(*text, energy_path);
  if (v >= max_range_uj) {
    throw MeterError(energy_path.string() + ": reading " + std::to_string(v) +
                     " is outside [0, " + std::to_string(max_range_uj) + ")");
  }
  return v;
}

std::vector<RaplDomain> discover_rapl_domains(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return {};
  std::vector<RaplDomain> out;
  std::set<fs::path> seen;
  auto add = [&](const fs::path& dir) {
    auto canonical = fs::weakly_canonical(dir, ec);
    if (!seen.insert(ec ? dir : canonical).second) return;
    out.push_back(load_domain(dir));
  };
  for (const auto& [idx, pkg] : rapl_children(root, 1)) {
    add(pkg);
    for (const auto& [sub_idx, sub] : rapl_children(pkg, 2)) add(sub);
  }
  // Some kernels also expose subdomains at the top level as symlinks.
  for (const auto& [idx, sub] : rapl_children(root, 2)) add(sub);
  return out;
}

double delta_energy(std::uint64_t before_uj, std::uint64_t after_uj, std::uint64_t max_range_uj) {
  if (max_range_uj == 0) throw MeterError("counter modulus must be > 0");
  if (before_uj >= max_range_uj || after_uj >= max_range_uj) {
    throw MeterError("counter reading outside [0, " + std::to_string(max_range_uj) + ")");
  }
  const std::uint64_t diff =
      after_uj >= before_uj ? after_uj - before_uj : max_range_uj - before_uj + after_uj;
  return static_cast<double>(diff) / 1e6;
}

EnergyReading proxy_energy(double avg_power_w, double elapsed_s) {
  if (!(avg_power_w >= 0) || !(elapsed_s >= 0)) {
    throw SpecError("proxy energy needs non-negative power and time");
  }
  EnergyReading r;
  r.joules = avg_power_w * elapsed_s;
  r.method = EnergyMethod::Proxy;
  std::ostringstream os;
  os << "nominal " << avg_power_w << " W";
  r.source = os.str();
  return r;
}

PowerTrace::PowerTrace(std::vector<PowerPoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].p >= 0)) throw SpecError("power trace: negative power at row " + std::to_string(i));
    if (i > 0 && !(points_[i].t > points_[i - 1].t)) {
      throw SpecError("power trace: timestamps must be strictly increasing (row " +
                      std::to_string(i) + ")");
    }
  }
}

PowerTrace PowerTrace::parse_csv(std::string_view text) {
  std::vector<PowerPoint> points;
  std::size_t pos = 0;
  int line_no = 0;
  bool header = false;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header) {
      if (line != "t_s,p_w") throw MeterError("power trace: expected header 't_s,p_w'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    PowerPoint pt;
    auto parse = [&](std::string_view field, double& out) {
      auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
      if (ec != std::errc{} || p != field.data() + field.size() || field.empty()) {
        throw MeterError("power trace line " + std::to_string(line_no) + ": bad number '" +
                         std::string(field) + "'");
      }
    };
    if (comma == std::string_view::npos) {
      throw MeterError("power trace line " + std::to_string(line_no) + ": expected two fields");
    }
    parse(line.substr(0, comma), pt.t);
    parse(line.substr(comma + 1), pt.p);
    points.push_back(pt);
  }
  if (!header) throw MeterError("power trace: empty file");
  try {
    return PowerTrace(std::move(points));
  } catch (const SpecError& e) {
    throw MeterError(e.what());
  }
}

PowerTrace PowerTrace::load_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeterError("cannot open power trace " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string PowerTrace::to_csv() const {
  std::string out = "t_s,p_w\n";
  char buf[64];
  for (const auto& pt : points_) {
    auto [p1, e1] = std::to_chars(buf, buf + sizeof buf, pt.t);
    out.append(buf, p1);
    out += ',';
    auto [p2, e2] = std::to_chars(buf, buf + sizeof buf, pt.p);
    out.append(buf, p2);
    out += '\n';
  }
  return out;
}

double integrate_trace(const PowerTrace& trace, double t0, double t1) {
  if (!(t0 < t1)) throw SpecError("integration window needs t0 < t1");
  if (trace.empty()) throw MeterError("power trace is empty");
  if (t0 < trace.start() || t1 > trace.end()) {
    std::ostringstream os;
    os << "power trace covers [" << trace.start() << ", " << trace.end()
       << "] s but the window is [" << t0 << ", " << t1 << "] s";
    throw MeterError(os.str());
  }
  const auto& pts = trace.points();
  auto power_at = [&](double t) {
    auto hi = std::ranges::lower_bound(pts, t, {}, &PowerPoint::t);
    if (hi->t == t) return hi->p;
    auto lo = hi - 1;
    const double w = (t - lo->t) / (hi->t - lo->t);
    return lo->p + w * (hi->p - lo->p);
  };

  double joules = 0;
  double prev_t = t0;
  double prev_p = power_at(t0);
  for (auto it = std::ranges::upper_bound(pts, t0, {}, &PowerPoint::t);
       it != pts.end() && it->t < t1; ++it) {
    joules += 0.5 * (prev_p + it->p) * (it->t - prev_t);
    prev_t = it->t;
    prev_p = it->p;
  }
  joules += 0.5 * (prev_p + power_at(t1)) * (t1 - prev_t);
  return joules;
}

double monotonic_seconds() {
  timespec ts{};
  ::clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

double session_energy(const std::vector<EnergySample>& samples, std::uint64_t max_range_uj) {
  double total = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    total += delta_energy(samples[i - 1].e_uj, samples[i].e_uj, max_range_uj);
  }
  return total;
}

double window_energy(const std::vector<EnergySample>& samples, std::uint64_t max_range_uj,
                     double t0, double t1) {
  if (!(t0 <= t1)) throw SpecError("energy window needs t0 <= t1");
  if (samples.size() < 2 || t0 < samples.front().t || t1 > samples.back().t) {
    throw MeterError("energy samples do not cover the measurement window");
  }
  std::vector<double> cumulative(samples.size(), 0.0);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    cumulative[i] =
        cumulative[i - 1] + delta_energy(samples[i - 1].e_uj, samples[i].e_uj, max_range_uj);
  }
  auto energy_at = [&](double t) {
    auto it = std::ranges::lower_bound(samples, t, {}, &EnergySample::t);
    const auto i = static_cast<std::size_t>(it - samples.begin());
    if (it->t == t || i == 0) return cumulative[i];
    const double w = (t - samples[i - 1].t) / (samples[i].t - samples[i - 1].t);
    return cumulative[i - 1] + w * (cumulative[i] - cumulative[i - 1]);
  };
  return energy_at(t1) - energy_at(t0);
}

SamplingSession::SamplingSession(CounterReader reader, std::uint64_t max_range_uj, double interval_s)
    : reader_(std::move(reader)), max_range_uj_(max_range_uj), interval_s_(interval_s) {
  if (!(interval_s >= 0.001)) throw SpecError("sampling interval must be >= 0.001 s");
  try {
    samples_.push_back({monotonic_seconds(), reader_()});
  } catch (const std::exception& e) {
    error_ = e.what();
    return;
  }
  thread_ = std::thread([this] { run(); });
}

SamplingSession::~SamplingSession() { stop(); }

void SamplingSession::run() {
  std::unique_lock lock(mutex_);
  const auto interval = std::chrono::duration<double>(interval_s_);
  const auto step = std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval);
  auto next = std::chrono::steady_clock::now() + step;
  while (true) {
    const bool stopping = wake_.wait_until(lock, next, [this] { return stop_requested_; });
    lock.unlock();
    EnergySample s;
    bool ok = true;
    std::string err;
    try {
      s.t = monotonic_seconds();
      s.e_uj = reader_();
    } catch (const std::exception& e) {
      ok = false;
      err = e.what();
    }
    lock.lock();
    if (!ok) {
      error_ = err;
      return;
    }
    if (samples_.empty() || s.t > samples_.back().t) samples_.push_back(s);
    if (stopping) return;
    next += step;
  }
}

std::vector<EnergySample> SamplingSession::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopped_) return {};
    stopped_ = true;
    stop_requested_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  return std::move(samples_);
}

std::optional<std::string> SamplingSession::error() const {
  std::lock_guard lock(mutex_);
  return error_;
}

std::unique_ptr<SamplingSession> sample_session(const RaplDomain& domain, double interval_s) {
  return std::make_unique<SamplingSession>([domain] { return domain.read_uj(); },
                                           domain.max_range_uj, interval_s);
}

}  // namespace joulebench
