#pragma once

#include <string>

namespace hems {

/// Dollar totals per degradation / consumption category.
struct CostBreakdown {
  double battery_degradation = 0.0;
  double h2 = 0.0;
  double fc_idling = 0.0;
  double fc_high_load = 0.0;
  double fc_load_change = 0.0;
  double fc_on_off = 0.0;

  double total() const {
    return battery_degradation + h2 + fc_idling + fc_high_load + fc_load_change + fc_on_off;
  }
  CostBreakdown& operator+=(const CostBreakdown& o) {
    battery_degradation += o.battery_degradation;
    h2 += o.h2;
    fc_idling += o.fc_idling;
    fc_high_load += o.fc_high_load;
    fc_load_change += o.fc_load_change;
    fc_on_off += o.fc_on_off;
    return *this;
  }
};

}  // namespace hems
