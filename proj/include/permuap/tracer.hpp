#ifndef PERMUAP_TRACER_HPP_
#define PERMUAP_TRACER_HPP_

#include "permuap/laperm.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace permuap {

struct TraceEvent
{
  std::size_t epoch = 0;
  std::vector<bool> mask;  // true where the value changed
  std::size_t moved  = 0;
  double loss_before = 0.0;
  double loss_after  = 0.0;
};

struct TraceLog
{
  std::size_t n = 0;
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<TraceEvent> events;
};

/// Mask by exact value inequality; swapping equal values is not a move.
TraceEvent record_event(const Eigen::VectorXd &theta_before, const Eigen::VectorXd &theta_after, std::size_t epoch,
                        double loss_before, double loss_after);

/// Appends every projection to `log`, up to max_events (0 for no limit).
ProjectionObserver trace_observer(TraceLog &log, std::size_t max_events = 0);

struct TraceWindow
{
  std::size_t first_event = 0;
  std::size_t first_epoch = 0;
  std::size_t last_epoch  = 0;
  std::size_t events      = 0;
  double mean_moved       = 0.0;
  double loss_slope       = 0.0;  // least squares of loss_after against epoch, 0 for a single event
  double mean_loss        = 0.0;
};

std::vector<TraceWindow> summarize(const TraceLog &log, std::size_t window = 10);

/// Positions never marked active anywhere in the log.
std::vector<std::size_t> never_active(const TraceLog &log, std::size_t length);

/// "F12T3F5" style run-length encoding.
std::string rle_encode(const std::vector<bool> &mask);
std::vector<bool> rle_decode(const std::string &text);

void export_csv(const TraceLog &log, std::ostream &os);
void export_csv(const TraceLog &log, const std::string &path);
void export_summary_csv(const std::vector<TraceWindow> &windows, std::ostream &os);

}  // namespace permuap

#endif  // PERMUAP_TRACER_HPP_
