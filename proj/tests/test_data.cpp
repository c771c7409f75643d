#include "durem/data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace durem {
namespace {

EventHistory read(const std::string& text) {
    std::istringstream in(text);
    return parse_event_history(in, ColumnMap{});
}

const char* kTable1 = "sender,receiver,t_start,t_end\nA,B,10,50\nA,C,20,70\nB,C,50,90\n";

TEST(EventFile, Table1Loads) {
    const auto h = read(kTable1);
    ASSERT_EQ(h.size(), 3u);
    EXPECT_EQ(h.n_actors(), 3u);
    EXPECT_EQ(h.actors.label(h.events[2].sender), "B");
    EXPECT_EQ(h.events[1].t_start, 20.0);
    EXPECT_EQ(h.events[1].t_end, 70.0);
    const auto report = validate_history(h, parse_directionality("UU"));
    EXPECT_TRUE(report.errors.empty());
    EXPECT_TRUE(report.warnings.empty());
}

TEST(EventFile, HeaderOnlyIsEmpty) {
    const auto h = read("sender,receiver,t_start,t_end\n");
    EXPECT_EQ(h.size(), 0u);
}

TEST(EventFile, ZeroDurationsWarnOncePerRow) {
    ValidationReport warnings;
    std::istringstream in("sender,receiver,t_start,t_end\nA,B,1,1\nA,C,2,4\nB,C,3,3\nC,A,5,5\n");
    const auto h = parse_event_history(in, ColumnMap{}, &warnings);
    std::size_t zero = 0;
    for (const auto& e : h.events) zero += e.t_end == e.t_start;
    EXPECT_EQ(zero, 3u);
    EXPECT_EQ(warnings.warnings.size(), zero);
}

TEST(EventFile, UnparseableTimeAborts) {
    std::istringstream in("sender,receiver,t_start,t_end\nA,B,1,x\n");
    EXPECT_THROW(parse_event_history(in, ColumnMap{}), DataError);
}

TEST(EventFile, CustomColumnsAndDelimiter) {
    ColumnMap cols;
    cols.sender = "from";
    cols.receiver = "to";
    cols.t_start = "begin";
    cols.t_end = "finish";
    cols.group = "day";
    cols.delimiter = '\t';
    std::istringstream in("day\tfinish\tbegin\tto\tfrom\nd1\t5\t1\tB\tA\n");
    const auto h = parse_event_history(in, cols);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h.events[0].t_start, 1.0);
    EXPECT_EQ(h.events[0].group.value_or(""), "d1");
    EXPECT_EQ(h.actors.label(h.events[0].receiver), "B");
}

TEST(EventFile, WriteRoundTrips) {
    auto h = read("sender,receiver,t_start,t_end\nA,B,0.1,0.30000000000000004\nB,A,1e-9,2.5\n");
    std::ostringstream out;
    write_event_history(h, out);
    const auto back = read(out.str());
    ASSERT_EQ(back.size(), h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        EXPECT_EQ(back.events[k].t_start, h.events[k].t_start);
        EXPECT_EQ(back.events[k].t_end, h.events[k].t_end);
    }
}

TEST(Validation, SelfLoopIsAnError) {
    const auto h = read("sender,receiver,t_start,t_end\nA,A,0,5\n");
    const auto report = validate_history(h, parse_directionality("DD"));
    ASSERT_EQ(report.errors.size(), 1u);
    EXPECT_EQ(report.errors[0].rule, "self-loop");
}

TEST(Validation, SharedStartTimesWarn) {
    const auto h = read("sender,receiver,t_start,t_end\nA,B,20,30\nC,D,20,40\nA,C,25,26\nB,D,27,31\n");
    const auto report = validate_history(h, parse_directionality("DD"));
    EXPECT_TRUE(report.ok());
    // independent count of repeated start times
    std::map<double, int> starts;
    for (const auto& e : h.events) ++starts[e.t_start];
    std::size_t ties = 0;
    for (const auto& [t, c] : starts) ties += static_cast<std::size_t>(c - 1);
    std::size_t warned = 0;
    for (const auto& w : report.warnings) warned += w.rule.find("shared start") != std::string::npos;
    EXPECT_EQ(warned, ties);
    EXPECT_EQ(ties, 1u);
}

TEST(Validation, OverlapDependsOnDirectionality) {
    const auto h = read("sender,receiver,t_start,t_end\nA,B,0,10\nB,A,5,15\n");
    EXPECT_TRUE(validate_history(h, parse_directionality("DD")).ok());
    EXPECT_FALSE(validate_history(h, parse_directionality("UU")).ok());
    EXPECT_FALSE(validate_history(h, parse_directionality("DU")).ok());
}

TEST(Validation, BackToBackEventsOnOneDyadAreFine) {
    const auto h = read("sender,receiver,t_start,t_end\nA,B,0,10\nA,B,10,15\n");
    EXPECT_TRUE(validate_history(h, parse_directionality("DD")).ok());
}

TEST(Validation, DuplicatesAndNegativeStarts) {
    const auto h = read("sender,receiver,t_start,t_end\nA,B,0,10\nA,B,0,10\nB,C,-1,3\n");
    const auto report = validate_history(h, parse_directionality("DD"));
    EXPECT_EQ(report.errors.size(), 2u);
}

TEST(Ordering, Table1Transitions) {
    const auto h = read(kTable1);
    const auto keys = ordered_transitions(h.events);
    const std::vector<double> times{10, 20, 50, 50, 70, 90};
    const std::vector<bool> ends{false, false, true, false, true, true};
    ASSERT_EQ(keys.size(), 6u);
    for (std::size_t k = 0; k < 6; ++k) {
        const auto& e = h.events[keys[k].event];
        EXPECT_EQ(keys[k].is_end ? e.t_end : e.t_start, times[k]);
        EXPECT_EQ(keys[k].is_end, ends[k]);
    }
}

TEST(Ordering, SingleEvent) {
    const auto h = read("sender,receiver,t_start,t_end\ni,j,0,5\n");
    const auto keys = ordered_transitions(h.events);
    ASSERT_EQ(keys.size(), 2u);
    EXPECT_FALSE(keys[0].is_end);
    EXPECT_TRUE(keys[1].is_end);
}

TEST(Ordering, ZeroDurationEndFollowsItsStart) {
    const auto h = read("sender,receiver,t_start,t_end\nA,B,0,5\nC,D,5,5\nE,F,5,9\n");
    const auto keys = ordered_transitions(h.events);
    // end(A,B) then start(C,D), end(C,D), start(E,F)
    ASSERT_EQ(keys.size(), 6u);
    EXPECT_EQ(keys[1].event, 0u);
    EXPECT_TRUE(keys[1].is_end);
    EXPECT_EQ(keys[2].event, 1u);
    EXPECT_FALSE(keys[2].is_end);
    EXPECT_EQ(keys[3].event, 1u);
    EXPECT_TRUE(keys[3].is_end);
    EXPECT_EQ(keys[4].event, 2u);
}

TEST(Ordering, MatchesExhaustiveSort) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> tick(0, 6);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<DurationEvent> events;
        for (std::size_t k = 0; k < 6; ++k) {
            DurationEvent e;
            e.t_start = tick(rng);
            e.t_end = e.t_start + tick(rng);
            e.row = k;
            events.push_back(e);
        }
        sort_events(events);
        const auto keys = ordered_transitions(events);
        ASSERT_EQ(keys.size(), 12u);
        // every ordering constraint checked pairwise
        std::vector<std::size_t> pos_start(6), pos_end(6);
        for (std::size_t p = 0; p < keys.size(); ++p) (keys[p].is_end ? pos_end : pos_start)[keys[p].event] = p;
        for (std::size_t a = 0; a < 6; ++a) {
            EXPECT_LT(pos_start[a], pos_end[a]);
            for (std::size_t b = 0; b < 6; ++b) {
                if (a == b) continue;
                const auto &ea = events[a], &eb = events[b];
                if (ea.t_start < eb.t_start || (ea.t_start == eb.t_start && a < b)) {
                    EXPECT_LT(pos_start[a], pos_start[b]);
                }
                if (ea.t_end == eb.t_start && ea.t_end > ea.t_start) {
                    EXPECT_LT(pos_end[a], pos_start[b]);
                }
                if (ea.t_end < eb.t_end) {
                    EXPECT_LT(pos_end[a], pos_end[b]);
                }
            }
        }
    }
}

TEST(Gaps, DayTwoRebasedToEndOfDayOne) {
    std::istringstream in(
        "sender,receiver,t_start,t_end,day\nA,B,10,100,d1\nB,C,20,60,d1\nA,C,1000,1005,d2\nB,A,1003,1010,d2\n");
    ColumnMap cols;
    cols.group = "day";
    const auto h = parse_event_history(in, cols);
    const auto c = collapse_gaps(h);
    ASSERT_EQ(c.size(), 4u);
    EXPECT_EQ(c.events[2].t_start, 100.0);
    EXPECT_EQ(c.events[2].t_end, 105.0);
    // within-group gaps and durations are unchanged
    for (std::size_t a = 0; a < 4; ++a) {
        EXPECT_DOUBLE_EQ(c.events[a].duration(), h.events[a].duration());
        for (std::size_t b = 0; b < 4; ++b) {
            if (h.events[a].group == h.events[b].group) {
                EXPECT_DOUBLE_EQ(c.events[b].t_start - c.events[a].t_start, h.events[b].t_start - h.events[a].t_start);
            }
        }
    }
}

TEST(Gaps, SingleOrContiguousGroupsUnchanged) {
    std::istringstream one("sender,receiver,t_start,t_end,g\nA,B,3,9,x\nB,C,4,5,x\n");
    ColumnMap cols;
    cols.group = "g";
    auto h = parse_event_history(one, cols);
    auto c = collapse_gaps(h);
    for (std::size_t k = 0; k < h.size(); ++k) EXPECT_EQ(c.events[k].t_start, h.events[k].t_start);

    std::istringstream two("sender,receiver,t_start,t_end,g\nA,B,0,10,x\nB,C,10,12,y\n");
    h = parse_event_history(two, cols);
    c = collapse_gaps(h);
    for (std::size_t k = 0; k < h.size(); ++k) {
        EXPECT_EQ(c.events[k].t_start, h.events[k].t_start);
        EXPECT_EQ(c.events[k].t_end, h.events[k].t_end);
    }
}

TEST(Floor, SmallestPositiveDurationTimesMilli) {
    const auto h = read("sender,receiver,t_start,t_end\nA,B,0,4\nB,C,1,1\nC,A,2,2.5\n");
    EXPECT_DOUBLE_EQ(default_duration_floor(h), 0.5e-3);
}

TEST(Covariates, AttributesAndTies) {
    ActorRegistry actors;
    actors.intern("A");
    actors.intern("B");
    CovariateSet cov;
    std::istringstream attrs("actor,gender,age\nB,f,30\nA,m,41\nC,f,22\n");
    parse_actor_attributes(attrs, actors, cov);
    EXPECT_EQ(actors.size(), 3u);
    EXPECT_EQ(cov.attribute("gender", 1).text, "f");
    EXPECT_DOUBLE_EQ(cov.numeric_attribute("age", 0), 41.0);
    EXPECT_THROW((void)cov.numeric_attribute("gender", 0), std::exception);

    std::istringstream ties("actor_a,actor_b,friend\nA,B,2\nC,A,1\n");
    parse_dyadic_ties(ties, actors, cov);
    EXPECT_DOUBLE_EQ(cov.tie("friend", 0, 1, Mode::directed), 2.0);
    EXPECT_DOUBLE_EQ(cov.tie("friend", 1, 0, Mode::directed), 0.0);
    EXPECT_DOUBLE_EQ(cov.tie("friend", 0, 2, Mode::undirected), 1.0);
}

TEST(Covariates, MissingActorRowIsAnError) {
    ActorRegistry actors;
    actors.intern("A");
    actors.intern("B");
    CovariateSet cov;
    std::istringstream attrs("actor,age\nA,3\n");
    EXPECT_THROW(parse_actor_attributes(attrs, actors, cov), DataError);
}

}  // namespace
}  // namespace durem
