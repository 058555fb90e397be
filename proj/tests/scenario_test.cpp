#include <string>

#include <gtest/gtest.h>

#include "dforge/cli.hpp"
#include "dforge/scenario.hpp"
#include "test_support.hpp"

namespace dforge {
namespace {

const char* kMinimal = R"(# minimal
[channels]
g1 : sig(g,r)*ad
g2 : sig(e,r)*a
[params]
g1 = 1
g2 = 2
delta = 100
[space]
n_max = 4
[state]
initial = e,0
[time]
t_end = 10
samples = 11
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}

TEST(ParseScenario, RbPreset) {
    const Scenario s = parse_scenario(detail::read_file(testing::source_path("scenarios/rb85_preset.cfg")));
    EXPECT_EQ(s.params.at("g1"), 7e5);
    EXPECT_EQ(s.params.at("g2"), 7e5);
    EXPECT_EQ(s.params.at("delta"), 2.45e8);
    EXPECT_EQ(s.levels, (std::vector<std::string>{"g", "r", "e"}));
    ASSERT_EQ(s.channels.size(), 3u);
    EXPECT_EQ(s.channels[0].op, parse_operator_expr("sig(g,r)*ad"));
    EXPECT_EQ(s.n_max, 20);
    EXPECT_EQ(s.initial, (StateDescriptor{"e", false, 0, 0.0}));
    EXPECT_NO_THROW(s.channel_spec());
}

TEST(ParseScenario, Defaults) {
    const Scenario s = parse_scenario(kMinimal);
    EXPECT_EQ(s.levels, (std::vector<std::string>{"g", "r", "e"}));
    EXPECT_FALSE(s.dt_max.has_value());
    EXPECT_EQ(s.samples, 11);
    EXPECT_EQ(s.channels[1].lambda, Coefficient::symbol("g2"));
}

TEST(ParseScenario, MissingKeys) {
    try {
        parse_scenario(replace(kMinimal, "delta = 100\n", ""));
        FAIL();
    } catch (const MissingKey& e) {
        EXPECT_EQ(e.key(), "delta");
    }
    EXPECT_THROW(parse_scenario(replace(kMinimal, "samples = 11\n", "")), MissingKey);
    EXPECT_THROW(parse_scenario(replace(kMinimal, "[space]\nn_max = 4\n", "")), MissingKey);
}

TEST(ParseScenario, UnboundParameter) {
    try {
        parse_scenario(replace(kMinimal, "g2 = 2\n", ""));
        FAIL();
    } catch (const UnboundParameter& e) {
        EXPECT_EQ(e.symbol(), "g2");
    }
    EXPECT_THROW(parse_scenario(replace(kMinimal, "g1 : sig(g,r)*ad", "g1 : kappa*sig(g,r)*ad")), UnboundParameter);
}

TEST(ParseScenario, NonPositiveTruncation) {
    EXPECT_THROW(parse_scenario(replace(kMinimal, "n_max = 4", "n_max = 0")), NonPositiveTruncation);
    EXPECT_THROW(parse_scenario(replace(kMinimal, "n_max = 4", "n_max = -3")), NonPositiveTruncation);
}

TEST(ParseScenario, RejectsUnknownSectionsAndKeys) {
    const std::string bad = std::string(kMinimal) + "[cavity]\nkappa = 1\n";
    try {
        parse_scenario(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), bad.find("[cavity]"));
    }
    EXPECT_THROW(parse_scenario(replace(kMinimal, "n_max = 4", "nmax = 4")), ParseError);
    EXPECT_THROW(parse_scenario(replace(kMinimal, "t_end = 10", "t_end = ten")), ParseError);
    EXPECT_THROW(parse_scenario(std::string("n_max = 3\n") + kMinimal), ParseError);
}

TEST(ParseScenario, ExpressionErrorsPointIntoTheFile) {
    const std::string bad = replace(kMinimal, "g2 : sig(e,r)*a", "g2 : sig(e,r)**a");
    try {
        parse_scenario(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), bad.find("**a") + 1);
        EXPECT_LE(e.position(), bad.size());
    }
    EXPECT_THROW(parse_scenario(replace(kMinimal, "sig(g,r)*ad", "sig(g,x)*ad")), UnknownLevel);
    EXPECT_THROW(parse_scenario(replace(kMinimal, "g1 : sig", "g1*a : sig")), ParseError);
}

TEST(ParseScenario, States) {
    const Scenario coherent = parse_scenario(replace(kMinimal, "initial = e,0", "initial = g, coherent(1.5)"));
    EXPECT_EQ(coherent.initial, (StateDescriptor{"g", true, 0, 1.5}));
    EXPECT_THROW(parse_scenario(replace(kMinimal, "initial = e,0", "initial = e,9")), FockOverflow);
    EXPECT_THROW(parse_scenario(replace(kMinimal, "initial = e,0", "initial = x,0")), UnknownLevel);
    EXPECT_THROW(parse_scenario(replace(kMinimal, "initial = e,0", "initial = e")), ParseError);
}

TEST(ParseScenario, CustomLevels) {
    const std::string text = replace(replace(replace(kMinimal, "[channels]", "[levels]\nlo, mid\nhi\n[channels]"),
                                             "sig(g,r)*ad", "sig(lo,mid)*ad"),
                                     "sig(e,r)*a", "sig(hi,mid)*a");
    const Scenario s = parse_scenario(replace(text, "initial = e,0", "initial = hi,0"));
    EXPECT_EQ(s.levels, (std::vector<std::string>{"lo", "mid", "hi"}));
    EXPECT_EQ(s.space().dim(), 15);
}

TEST(ParseScenario, DetuningsMustAgree) {
    const Scenario s = parse_scenario(detail::read_file(testing::source_path("scenarios/distinct_detunings.cfg")));
    try {
        s.channel_spec();
        FAIL();
    } catch (const SpecError& e) {
        EXPECT_NE(std::string(e.what()).find("common detuning required"), std::string::npos);
    }
    const Scenario same = parse_scenario(replace(kMinimal, "sig(e,r)*a", "sig(e,r)*a @ delta"));
    EXPECT_NO_THROW(same.channel_spec());
}

TEST(ParseScenario, PureAndHashStable) {
    const Scenario a = parse_scenario(kMinimal), b = parse_scenario(kMinimal);
    EXPECT_EQ(canonical_text(a), canonical_text(b));
    EXPECT_NE(canonical_text(a), canonical_text(parse_scenario(replace(kMinimal, "g2 = 2", "g2 = 3"))));
}

}  // namespace
}  // namespace dforge
