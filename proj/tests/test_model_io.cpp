#include <gtest/gtest.h>

#include "stopchain/errors.hpp"
#include "stopchain/io.hpp"

using namespace stopchain;

namespace {

std::string message_of(std::string_view text) {
    try {
        parse_model(text);
    } catch (const ModelError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(ModelIo, ParsesSchema) {
    const Model m = parse_model(R"({"n_states": 3, "rates": [[0,1,2.0],[1,2,0.5]],
        "payoff": [0, 1, 4], "r": 0.25, "labels": ["a","b","c"]})");
    EXPECT_EQ(m.generator.size(), 3u);
    EXPECT_DOUBLE_EQ(m.generator.rate(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(m.payoff.discount_rate, 0.25);
    EXPECT_EQ(m.labels[2], "c");
}

TEST(ModelIo, RoundTripIsExact) {
    Model m{Generator(2, {{0, 1, 0.1}, {1, 0, 1.0 / 3.0}}), {{0.7, 2.0 / 7.0}, 0.3}, {}};
    const Model back = parse_model(dump_model(m));
    EXPECT_EQ(back.generator.rate(1, 0), 1.0 / 3.0);
    EXPECT_EQ(back.payoff.values[1], 2.0 / 7.0);
    EXPECT_EQ(dump_model(back), dump_model(m));
}

TEST(ModelIo, MalformedJsonReportsLineAndColumn) {
    const std::string msg = message_of("{\n  \"n_states\": 2,\n  \"rates\": [[0,1,1.0],\n}");
    EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(ModelIo, SchemaErrors) {
    EXPECT_NE(message_of(R"({"n_states": 2, "rates": [[1,1,1.0]], "payoff": [0,0], "r": 1})")
                  .find("from == to"),
              std::string::npos);
    EXPECT_NE(message_of(R"({"n_states": 2, "rates": [], "payoff": [0,0]})").find("\"r\""),
              std::string::npos);
    EXPECT_NE(message_of(R"({"n_states": 2, "rates": [[0,5,1.0]], "payoff": [0,0], "r": 1})")
                  .find(">= n_states"),
              std::string::npos);
}

TEST(ModelIo, InvariantViolationsListed) {
    try {
        parse_model(R"({"n_states": 2, "rates": [[0,1,-1.0]], "payoff": [0,-2], "r": 0})");
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_GE(e.violations().size(), 3u);
        EXPECT_NE(std::string(e.what()).find("r must be > 0"), std::string::npos);
    }
    EXPECT_NO_THROW(parse_model(R"({"n_states": 1, "rates": [], "payoff": [0], "r": 0})", false));
}

TEST(ModelIo, FormatDoubleRoundTrips) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
