// Shared test fixtures: the pointable imager procedure, its canonical value
// string, and frozen expected values computed by hand.

#ifndef SPSWEB_TESTS_FIXTURES_HPP
#define SPSWEB_TESTS_FIXTURES_HPP

#include <string>

#include "spsweb/swe_codec.hpp"

namespace spsweb::testing {

inline constexpr char kImagerValues[] =
    "2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,"
    "Y,pointToLookAt,51.902112,8.192728,0,Y,3.5";

// 2010-08-20T10:37:00Z and 12:30:00Z, frozen independently of the library's
// own calendar arithmetic.
inline constexpr std::int64_t kImagerStartUtc = 1282300620;
inline constexpr std::int64_t kImagerEndUtc = 1282307400;

inline swe::ParameterDescription imager_description() {
  using namespace swe;
  ParameterDescription desc;
  desc.procedure_id = "pointable-imager-01";

  FieldDescriptor start;
  start.name = "measurementStart";
  start.kind = FieldKind::Time;
  desc.fields.push_back(start);

  FieldDescriptor end;
  end.name = "measurementEnd";
  end.kind = FieldKind::Time;
  end.updatable = true;
  desc.fields.push_back(end);

  FieldDescriptor target;
  target.name = "measurementTarget";
  target.kind = FieldKind::Choice;
  target.optional = true;
  ChoiceBranch point;
  point.name = "pointToLookAt";
  FieldDescriptor location;
  location.name = "location";
  location.kind = FieldKind::Vector;
  location.components = {{"latitude", "deg"}, {"longitude", "deg"}, {"altitude", "m"}};
  point.fields.push_back(location);
  target.branches.push_back(point);
  desc.fields.push_back(target);

  FieldDescriptor priority;
  priority.name = "priority";
  priority.kind = FieldKind::Quantity;
  priority.optional = true;
  priority.updatable = true;
  priority.allowed_interval = Interval{0.0, 5.0};
  desc.fields.push_back(priority);

  validate_description(desc);
  return desc;
}

inline swe::ParameterBlock imager_block() {
  using namespace swe;
  ParameterBlock block;
  block.push_back({"measurementStart",
                   Value::of_time({kImagerStartUtc, 120, ""})});
  block.push_back({"measurementEnd", Value::of_time({kImagerEndUtc, 120, ""})});
  ParameterBlock branch_fields;
  branch_fields.push_back({"location", Value::vector({51.902112, 8.192728, 0.0})});
  block.push_back({"measurementTarget",
                   Value::choice("pointToLookAt", std::move(branch_fields))});
  block.push_back({"priority", Value::quantity(3.5)});
  return block;
}

inline swe::ParameterData imager_data() {
  swe::ParameterData data;
  data.blocks.push_back(imager_block());
  return data;
}

}  // namespace spsweb::testing

#endif  // SPSWEB_TESTS_FIXTURES_HPP
