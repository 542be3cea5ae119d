#pragma once

#include "ncs/lti_core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ncs {

/// One-hot choice of transmission link for a single sample. An all-zero vector
/// stands for "nothing sent" (times before the episode started).
struct LinkSelection {
  std::vector<std::uint8_t> oneHot;

  static LinkSelection link(int d, int D);
  static LinkSelection none(int D);

  // Selected delay, or -1 when nothing is selected.
  int delay() const;
  bool isOneHot() const;
  bool operator==(const LinkSelection&) const = default;
};

/// Freshest-sample selector: b[j] == 1 iff x_{k-j} is the freshest state the
/// controller holds at time k. window holds the granted links vartheta_{k-D..k}
/// in chronological order (window[D] is the allocation at k); entries for
/// negative times must be LinkSelection::none. For k < D the entry b[k+1] marks "nothing delivered yet".
std::vector<int> b_coefficients(std::span<const LinkSelection> window, int k, int D);

/// Convenience: builds the window from a full allocation history (links[s] is
/// the delay granted to sample s, s = 0..k).
std::vector<int> b_coefficients_from_links(std::span<const int> links, int k, int D);

struct ReceivedSample {
  int stamp = 0;  // time the state was sampled
  Vector value;
  int arrival = 0;  // stamp + allocated delay
};

/// Everything the plant controller of one loop knows at time k.
struct ControllerInfo {
  int D = 0;
  std::vector<LinkSelection> requested;  // theta_0..theta_k
  std::vector<LinkSelection> allocated;  // vartheta_0..vartheta_k
  std::vector<Vector> inputs;            // u_0..u_{k-1}
  std::optional<ReceivedSample> freshest;
  Vector estimate;

  /// vartheta_{k-D..k} with negative times zero-filled.
  std::vector<LinkSelection> allocationWindow(int k) const;
};

/// Keeps the sample only if it is fresher than the one already held.
void ingest(ControllerInfo& info, const ReceivedSample& sample, int now);

/// Conditional mean of x_k: the freshest sample propagated through the
/// dynamics with the recorded inputs, or the prior mean propagated the same
/// way when nothing has arrived. Throws InternalError if the buffer disagrees
/// with the acknowledged allocations.
Vector estimate(const ControllerInfo& info, const PlantModel& model, int k);

/// E[x_k | x_{k-j} = from, u]: j steps of the noiseless dynamics starting at
/// time k-j with inputs[k-j..k-1].
Vector propagate(const PlantModel& model, const Vector& from, int fromTime, int k,
                 std::span<const Vector> inputs);

}  // namespace ncs
