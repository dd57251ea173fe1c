#include "permuap/tracer.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

namespace permuap {

TraceEvent record_event(const Eigen::VectorXd &theta_before, const Eigen::VectorXd &theta_after, std::size_t epoch,
                        double loss_before, double loss_after)
{
  if (theta_before.size() != theta_after.size()) throw std::invalid_argument("theta lengths differ");
  TraceEvent e;
  e.epoch       = epoch;
  e.loss_before = loss_before;
  e.loss_after  = loss_after;
  e.mask.resize(static_cast<std::size_t>(theta_before.size()));
  for (Eigen::Index i = 0; i < theta_before.size(); ++i) {
    const bool active = theta_before[i] != theta_after[i];
    e.mask[static_cast<std::size_t>(i)] = active;
    e.moved += active;
  }
  return e;
}

ProjectionObserver trace_observer(TraceLog &log, std::size_t max_events)
{
  return [&log, max_events](const ProjectionView &v) {
    if (max_events && log.events.size() >= max_events) return;
    log.events.push_back(record_event(v.theta_before, v.theta_after, v.epoch, v.loss_before, v.loss_after));
  };
}

std::vector<TraceWindow> summarize(const TraceLog &log, std::size_t window)
{
  if (window == 0) throw std::invalid_argument("window must be positive");
  std::vector<TraceWindow> out;
  for (std::size_t start = 0; start < log.events.size(); start += window) {
    const std::size_t end = std::min(start + window, log.events.size());
    TraceWindow w;
    w.first_event = start;
    w.first_epoch = log.events[start].epoch;
    w.last_epoch  = log.events[end - 1].epoch;
    w.events      = end - start;
    double sx = 0, sy = 0, moved = 0;
    for (std::size_t i = start; i < end; ++i) {
      moved += static_cast<double>(log.events[i].moved);
      sx += static_cast<double>(log.events[i].epoch);
      sy += log.events[i].loss_after;
    }
    const double m = static_cast<double>(w.events);
    w.mean_moved   = moved / m;
    w.mean_loss    = sy / m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = start; i < end; ++i) {
      const double dx = static_cast<double>(log.events[i].epoch) - sx / m;
      sxx += dx * dx;
      sxy += dx * (log.events[i].loss_after - sy / m);
    }
    w.loss_slope = sxx > 0 ? sxy / sxx : 0.0;
    out.push_back(w);
  }
  return out;
}

std::vector<std::size_t> never_active(const TraceLog &log, std::size_t length)
{
  std::vector<bool> seen(length, false);
  for (const auto &e : log.events) {
    if (e.mask.size() != length) throw std::invalid_argument("mask length differs from theta length");
    for (std::size_t i = 0; i < length; ++i) seen[i] = seen[i] || e.mask[i];
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < length; ++i)
    if (!seen[i]) out.push_back(i);
  return out;
}

std::string rle_encode(const std::vector<bool> &mask)
{
  std::string out;
  for (std::size_t i = 0; i < mask.size();) {
    std::size_t j = i;
    while (j < mask.size() && mask[j] == mask[i]) ++j;
    out += mask[i] ? 'T' : 'F';
    out += std::to_string(j - i);
    i = j;
  }
  return out;
}

std::vector<bool> rle_decode(const std::string &text)
{
  std::vector<bool> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i++];
    if (c != 'T' && c != 'F') throw std::invalid_argument("bad run-length mask");
    std::size_t j = i;
    while (j < text.size() && text[j] >= '0' && text[j] <= '9') ++j;
    if (j == i) throw std::invalid_argument("bad run-length mask");
    out.insert(out.end(), std::stoull(text.substr(i, j - i)), c == 'T');
    i = j;
  }
  return out;
}

void export_csv(const TraceLog &log, std::ostream &os)
{
  os << "# permuap trace v1 n=" << log.n << " strategy=" << log.strategy << " seed=" << log.seed << '\n';
  os << "epoch,moved_count,loss_before,loss_after,mask\n";
  os.precision(17);
  for (const auto &e : log.events)
    os << e.epoch << ',' << e.moved << ',' << e.loss_before << ',' << e.loss_after << ',' << rle_encode(e.mask) << '\n';
}

void export_csv(const TraceLog &log, const std::string &path)
{
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  export_csv(log, os);
}

void export_summary_csv(const std::vector<TraceWindow> &windows, std::ostream &os)
{
  os << "# permuap trace summary v1\n";
  os << "first_event,first_epoch,last_epoch,events,mean_moved,mean_loss,loss_slope\n";
  os.precision(17);
  for (const auto &w : windows)
    os << w.first_event << ',' << w.first_epoch << ',' << w.last_epoch << ',' << w.events << ',' << w.mean_moved << ','
       << w.mean_loss << ',' << w.loss_slope << '\n';
}

}  // namespace permuap
