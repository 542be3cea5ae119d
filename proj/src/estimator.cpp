#include "ncs/estimator.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <string>

namespace ncs {

LinkSelection LinkSelection::link(int d, int D) {
  if (d < 0 || d > D) throw ConfigError("link index out of range");
  LinkSelection s = none(D);
  s.oneHot[static_cast<std::size_t>(d)] = 1;
  return s;
}

LinkSelection LinkSelection::none(int D) {
  return LinkSelection{std::vector<std::uint8_t>(static_cast<std::size_t>(D) + 1, 0)};
}

int LinkSelection::delay() const {
  const auto it = std::find(oneHot.begin(), oneHot.end(), 1);
  return it == oneHot.end() ? -1 : static_cast<int>(it - oneHot.begin());
}

bool LinkSelection::isOneHot() const {
  return std::count(oneHot.begin(), oneHot.end(), 1) == 1 &&
         std::all_of(oneHot.begin(), oneHot.end(), [](auto v) { return v <= 1; });
}

std::vector<int> b_coefficients(std::span<const LinkSelection> window, int k, int D) {
  if (static_cast<int>(window.size()) != D + 1) {
    throw ConfigError("b_coefficients: window must hold D+1 allocations");
  }
  // vartheta(k-d)(l) with d in [0, D].
  auto at = [&](int d, int l) -> int {
    return window[static_cast<std::size_t>(D - d)].oneHot[static_cast<std::size_t>(l)];
  };
  // prod_{d=0}^{upto} prod_{l=0}^{d} [1 - vartheta_{k-d}(l)]: none of the samples
  // k, ..., k-upto has arrived by time k.
  auto noneArrived = [&](int upto) {
    int p = 1;
    for (int d = 0; d <= upto && p; ++d)
      for (int l = 0; l <= d; ++l) p *= 1 - at(d, l);
    return p;
  };

  std::vector<int> b(static_cast<std::size_t>(D) + 1, 0);
  for (int j = 0; j <= D; ++j) {
    if (j <= k) {
      int arrived = 0;
      for (int d = 0; d <= j; ++d) arrived += at(j, d);
      b[j] = noneArrived(j - 1) * arrived;
    } else if (j == k + 1) {
      b[j] = noneArrived(k);
    }
  }
  return b;
}

std::vector<int> b_coefficients_from_links(std::span<const int> links, int k, int D) {
  if (static_cast<int>(links.size()) < k + 1) {
    throw ConfigError("b_coefficients_from_links: history shorter than k+1");
  }
  std::vector<LinkSelection> window;
  window.reserve(static_cast<std::size_t>(D) + 1);
  for (int s = k - D; s <= k; ++s) {
    window.push_back(s < 0 ? LinkSelection::none(D) : LinkSelection::link(links[s], D));
  }
  return b_coefficients(window, k, D);
}

std::vector<LinkSelection> ControllerInfo::allocationWindow(int k) const {
  if (static_cast<int>(allocated.size()) < k + 1) {
    throw InternalError("allocation history shorter than k+1");
  }
  std::vector<LinkSelection> window;
  window.reserve(static_cast<std::size_t>(D) + 1);
  for (int s = k - D; s <= k; ++s) {
    window.push_back(s < 0 ? LinkSelection::none(D) : allocated[static_cast<std::size_t>(s)]);
  }
  return window;
}

void ingest(ControllerInfo& info, const ReceivedSample& sample, int now) {
  if (sample.arrival != now) throw InternalError("ingest: sample delivered at the wrong time");
  if (!info.freshest || sample.stamp > info.freshest->stamp) info.freshest = sample;
}

Vector propagate(const PlantModel& model, const Vector& from, int fromTime, int k,
                 std::span<const Vector> inputs) {
  if (static_cast<int>(inputs.size()) < k) throw InternalError("propagate: missing inputs");
  Vector z = from;
  for (int s = fromTime; s < k; ++s) z = model.A * z + model.B * inputs[s];
  return z;
}

Vector estimate(const ControllerInfo& info, const PlantModel& model, int k) {
  const auto b = b_coefficients(info.allocationWindow(k), k, info.D);
  const int j = static_cast<int>(std::find(b.begin(), b.end(), 1) - b.begin());
  if (j > info.D) throw InternalError("estimate: no freshest sample selected");
  if (j == k + 1) return propagate(model, model.meanX0, 0, k, info.inputs);
  if (!info.freshest || info.freshest->stamp != k - j) {
    throw InternalError("estimate: buffered sample does not match the acknowledged allocation "
                        "(expected stamp " + std::to_string(k - j) + ")");
  }
  return propagate(model, info.freshest->value, k - j, k, info.inputs);
}

}  // namespace ncs
