#include <set>
#include <string>

#include "doctest.h"
#include "spsweb/swe_codec.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace spsweb;
using namespace spsweb::swe;
using spsweb::testing::imager_block;
using spsweb::testing::imager_data;
using spsweb::testing::imager_description;
using spsweb::testing::kImagerValues;

namespace {

ParameterDescription single_bool_description() {
  ParameterDescription desc;
  desc.procedure_id = "bool-proc";
  FieldDescriptor f;
  f.name = "flag";
  f.kind = FieldKind::Boolean;
  desc.fields.push_back(f);
  validate_description(desc);
  return desc;
}

}  // namespace

TEST_CASE("pointable imager value string decodes to the expected block") {
  const auto desc = imager_description();
  const auto data = decode_parameter_data(desc, TextEncodingSpec{}, kImagerValues);

  REQUIRE(data.blocks.size() == 1);
  const ParameterBlock& block = data.blocks[0];
  REQUIRE(block.size() == 4);

  const Value* start = find_value(block, "measurementStart");
  REQUIRE(start);
  CHECK(start->kind == FieldKind::Time);
  CHECK(start->time.utc_seconds == spsweb::testing::kImagerStartUtc);
  CHECK(start->time.offset_minutes == 120);
  CHECK(start->time.fraction.empty());

  const Value* end = find_value(block, "measurementEnd");
  REQUIRE(end);
  CHECK(end->time.utc_seconds == spsweb::testing::kImagerEndUtc);
  CHECK(end->time.offset_minutes == 120);

  const Value* target = find_value(block, "measurementTarget");
  REQUIRE(target);
  CHECK(target->kind == FieldKind::Choice);
  CHECK(target->branch == "pointToLookAt");
  const Value* location = find_value(target->children, "location");
  REQUIRE(location);
  REQUIRE(location->vector_values.size() == 3);
  CHECK(location->vector_values[0] == doctest::Approx(51.902112).epsilon(1e-12));
  CHECK(location->vector_values[1] == doctest::Approx(8.192728).epsilon(1e-12));
  CHECK(location->vector_values[2] == 0.0);

  const Value* priority = find_value(block, "priority");
  REQUIRE(priority);
  CHECK(priority->number == 3.5);

  // The whole block equals the hand-built fixture, field by field.
  CHECK(block == imager_block());
}

TEST_CASE("re-encoding reproduces the value string byte for byte") {
  const auto desc = imager_description();
  const auto data = decode_parameter_data(desc, TextEncodingSpec{}, kImagerValues);
  CHECK(encode_parameter_data(desc, data) == kImagerValues);

  // And the hand-built fixture encodes to the same string.
  CHECK(encode_parameter_data(desc, imager_data()) == kImagerValues);
}

TEST_CASE("single mandatory boolean") {
  const auto desc = single_bool_description();
  const auto data = decode_parameter_data(desc, TextEncodingSpec{}, "Y");
  REQUIRE(data.blocks.size() == 1);
  REQUIRE(data.blocks[0].size() == 1);
  CHECK(data.blocks[0][0].name == "flag");
  CHECK(data.blocks[0][0].value.flag == true);
}

TEST_CASE("block separator yields one block per segment") {
  const auto desc = single_bool_description();
  const auto data = decode_parameter_data(desc, TextEncodingSpec{}, "Y@@N");
  REQUIRE(data.blocks.size() == 2);
  CHECK(data.blocks[0][0].value.flag == true);
  CHECK(data.blocks[1][0].value.flag == false);
}

TEST_CASE("absent optional encodes as a bare N presence token") {
  const auto desc = imager_description();
  ParameterData data;
  ParameterBlock block;
  block.push_back({"measurementStart",
                   Value::of_time({spsweb::testing::kImagerStartUtc, 120, ""})});
  block.push_back({"measurementEnd",
                   Value::of_time({spsweb::testing::kImagerEndUtc, 120, ""})});
  data.blocks.push_back(block);
  const std::string encoded = encode_parameter_data(desc, data);
  CHECK(encoded ==
        "2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,N,N");
  CHECK(decode_parameter_data(desc, data.encoding, encoded) == data);
}

TEST_CASE("decode error classification") {
  const auto desc = imager_description();
  const auto expect_code = [&](const std::string& text, Errc code) {
    try {
      decode_parameter_data(desc, TextEncodingSpec{}, text);
      FAIL("expected failure for: " << text);
    } catch (const SpsError& e) {
      CHECK(e.code() == code);
    }
  };

  SUBCASE("unknown selector") {
    expect_code(
        "2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,"
        "Y,areaToScan,1,2,3,N",
        Errc::UnknownSelector);
  }
  SUBCASE("missing tokens") {
    expect_code("2010-08-20T12:37:00+02:00", Errc::TokenCountMismatch);
  }
  SUBCASE("leftover tokens") {
    expect_code(
        "2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,N,N,extra",
        Errc::TokenCountMismatch);
  }
  SUBCASE("bad timestamp") {
    expect_code("2010-0820T14:30:00+02:00,2010-08-20T14:30:00+02:00,N,N",
                Errc::LexicalError);
  }
  SUBCASE("timestamp without numeric offset") {
    expect_code("2010-08-20T12:37:00Z,2010-08-20T14:30:00+02:00,N,N",
                Errc::LexicalError);
  }
  SUBCASE("bad presence flag") {
    expect_code("2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,maybe,N",
                Errc::LexicalError);
  }
  SUBCASE("priority outside allowed interval") {
    expect_code("2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,N,Y,7",
                Errc::ConstraintViolation);
  }
  SUBCASE("bad number") {
    expect_code("2010-08-20T12:37:00+02:00,2010-08-20T14:30:00+02:00,N,Y,nan",
                Errc::LexicalError);
  }
}

TEST_CASE("validate_values reports violations as data") {
  const auto desc = imager_description();

  SUBCASE("conforming block has an empty report") {
    CHECK(validate_values(desc, imager_block()).ok());
  }

  SUBCASE("missing mandatory start") {
    ParameterBlock block = imager_block();
    block.erase(block.begin());  // drop measurementStart
    const auto report = validate_values(desc, block);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == Violation::Code::MissingMandatory);
    CHECK(report.violations[0].field_path == "measurementStart");
  }

  SUBCASE("priority out of range") {
    ParameterBlock block = imager_block();
    for (auto& nv : block) {
      if (nv.name == "priority") nv.value = Value::quantity(7.0);
    }
    const auto report = validate_values(desc, block);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].code == Violation::Code::ConstraintViolation);
    CHECK(report.violations[0].field_path == "priority");
  }

  SUBCASE("unknown and wrong-kind fields") {
    ParameterBlock block = imager_block();
    block.push_back({"bogus", Value::of_text("x")});
    for (auto& nv : block) {
      if (nv.name == "priority") nv.value = Value::of_text("high");
    }
    const auto report = validate_values(desc, block);
    std::set<std::string> codes;
    for (const auto& v : report.violations) {
      codes.insert(std::string(to_string(v.code)));
    }
    CHECK(codes.count("UnknownField"));
    CHECK(codes.count("WrongKind"));
  }
}

TEST_CASE("description XML round-trips losslessly") {
  const auto desc = imager_description();
  const auto doc = description_to_xml(desc);
  const std::string serialized = xml::serialize(doc);
  const auto parsed = parse_tasking_description(serialized);
  CHECK(parsed == desc);
  // serialize(parse(d)) is canonical-equal to d
  CHECK(xml::canonical_equal(description_to_xml(parsed), doc));
}

TEST_CASE("description with duplicate field names is rejected") {
  const std::string doc =
      "<sps:ParameterDescription xmlns:sps=\"http://www.opengis.net/sps/2.0\" "
      "procedure=\"p\">"
      "<sps:field name=\"a\" kind=\"Boolean\"/>"
      "<sps:field name=\"a\" kind=\"Text\"/>"
      "</sps:ParameterDescription>";
  CHECK_THROWS_AS(parse_tasking_description(doc), SpsError);
  try {
    parse_tasking_description(doc);
  } catch (const SpsError& e) {
    CHECK(e.code() == Errc::SchemaError);
  }
}

TEST_CASE("encoding separators must not overlap") {
  TextEncodingSpec enc;
  enc.token_separator = ",";
  enc.block_separator = ",,";
  CHECK_THROWS_AS(validate_encoding(enc), SpsError);
  enc.block_separator = "";
  CHECK_THROWS_AS(validate_encoding(enc), SpsError);
  enc = TextEncodingSpec{};
  CHECK_NOTHROW(validate_encoding(enc));
}

TEST_CASE("parameter data XML matches the wire form") {
  const auto desc = imager_description();
  const auto data = decode_parameter_data(desc, TextEncodingSpec{}, kImagerValues);
  const auto el = parameter_data_to_xml(desc, data);
  CHECK(el.name == "sps:ParameterData");
  const auto* enc = el.child("sps:encoding");
  REQUIRE(enc);
  const auto* text_enc = enc->child("swe:TextEncoding");
  REQUIRE(text_enc);
  CHECK(*text_enc->attr("tokenSeparator") == ",");
  CHECK(*text_enc->attr("blockSeparator") == "@@");
  CHECK(el.required_child("sps:values").text == kImagerValues);
  CHECK(parameter_data_from_xml(desc, el) == data);
}

TEST_CASE("round-trip property over random descriptions and data") {
  testing::Rng rng(20100820);
  for (int i = 0; i < 250; ++i) {
    const auto desc = testing::random_description(rng);
    const auto data = testing::random_data(desc, rng);
    const std::string text = encode_parameter_data(desc, data);
    CAPTURE(desc.procedure_id);
    CAPTURE(text);
    const auto decoded = decode_parameter_data(desc, data.encoding, text);
    REQUIRE(decoded == data);
    // Re-encoding canonical text is the identity on strings.
    CHECK(encode_parameter_data(desc, decoded) == text);
  }
}

TEST_CASE("decode never crashes on arbitrary input") {
  testing::Rng rng(77);
  const auto desc = imager_description();
  int classified = 0;
  for (int i = 0; i < 500; ++i) {
    std::string junk;
    const int len = rng.range(0, 60);
    for (int j = 0; j < len; ++j) {
      junk += static_cast<char>(rng.range(32, 126));
    }
    try {
      decode_parameter_data(desc, TextEncodingSpec{}, junk);
    } catch (const SpsError& e) {
      ++classified;
      const Errc c = e.code();
      const bool known =
          c == Errc::UnknownSelector || c == Errc::TokenCountMismatch ||
          c == Errc::LexicalError || c == Errc::ConstraintViolation;
      CHECK(known);
    }
  }
  CHECK(classified > 0);
}

TEST_CASE("decode is deterministic") {
  const auto desc = imager_description();
  const auto a = decode_parameter_data(desc, TextEncodingSpec{}, kImagerValues);
  const auto b = decode_parameter_data(desc, TextEncodingSpec{}, kImagerValues);
  CHECK(a == b);
}
