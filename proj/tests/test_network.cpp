#include "reflex/network.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

using namespace reflex;

namespace {

NeuronState proto(NeuronRole role) {
    NeuronState n;
    n.role = role;
    return n;
}

Network three_cell_chain() {
    Network net;
    net.add_neuron(1, proto(NeuronRole::Afferent));
    net.add_neuron(2, proto(NeuronRole::Interneuron));
    net.add_neuron(3, proto(NeuronRole::Motoneuron));
    net.add_muscle(4, {3});
    return net;
}

} // namespace

TEST_CASE("fire with no outgoing links yields no deliveries") {
    Network net = three_cell_chain();
    const auto events = net.fire(3, 10.0); // still reaches the muscle
    REQUIRE(events.size() == 1);
    CHECK(std::holds_alternative<MuscleDischarge>(events[0].payload));

    Network bare;
    bare.add_neuron(1, proto(NeuronRole::Interneuron));
    CHECK(bare.fire(1, 5.0).empty());
    CHECK(bare.neuron(1).spikes == std::vector<SimTime>{5.0});
}

TEST_CASE("deliveries arrive at spike time plus each link delay") {
    Network net = three_cell_chain();
    net.add_link(1, 2, SynapseSign::Excitatory, 5.0, 0.0, 20.0, 1.5);
    net.add_link(1, 3, SynapseSign::Excitatory, 5.0, 0.0, 20.0, 3.0);
    const auto events = net.fire(1, 10.0);
    REQUIRE(events.size() == 2);
    CHECK(events[0].due == Catch::Approx(11.5));
    CHECK(events[0].target == 2);
    CHECK(events[1].due == Catch::Approx(13.0));
    CHECK(events[1].target == 3);
}

TEST_CASE("large fan-out matches the spike-time-plus-delay oracle") {
    Network net;
    net.add_neuron(1, proto(NeuronRole::Afferent));
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> delay(0.5, 8.0);
    std::vector<double> delays;
    for (AgentId id = 2; id < 52; ++id) {
        net.add_neuron(id, proto(NeuronRole::Interneuron));
        delays.push_back(delay(gen));
        net.add_link(1, id, SynapseSign::Excitatory, 5.0, 0.0, 20.0, delays.back());
    }
    const double t_spike = 42.0;
    const auto events = net.fire(1, t_spike);
    REQUIRE(events.size() == delays.size());

    // Multiset oracle: recompute every delivery time directly.
    std::multiset<double> expected;
    for (double d : delays) {
        expected.insert(t_spike + d);
    }
    std::multiset<double> got;
    for (const auto &ev : events) {
        got.insert(ev.due);
    }
    CHECK(got == expected);
}

TEST_CASE("stimulus pulses land on the arithmetic grid") {
    StimulusProtocol p;
    p.onset = 100.0;
    p.interval = 500.0;
    p.count = 3;
    p.targets = {1};
    const auto events = Network::apply_stimulus(p, 0.0);
    REQUIRE(events.size() == 3);
    CHECK(events[0].due == 100.0);
    CHECK(events[1].due == 600.0);
    CHECK(events[2].due == 1100.0);
}

TEST_CASE("an empty stimulus protocol is rejected") {
    StimulusProtocol p;
    p.onset = 10.0;
    p.interval = 5.0;
    p.count = 0;
    p.targets = {1};
    CHECK_THROWS_AS(Network::apply_stimulus(p, 0.0), DomainError);

    p.count = 1;
    p.targets = {};
    CHECK_THROWS_AS(Network::apply_stimulus(p, 0.0), DomainError);
}

TEST_CASE("stimulus expansion matches the cartesian enumeration oracle") {
    StimulusProtocol p;
    p.onset = 50.0;
    p.interval = 40.0;
    p.count = 25;
    p.targets = {1, 2, 3, 4};
    const auto events = Network::apply_stimulus(p, 0.0);
    REQUIRE(events.size() == 100);

    std::multiset<std::pair<double, AgentId>> expected;
    for (int k = 0; k < p.count; ++k) {
        for (AgentId t : p.targets) {
            expected.emplace(p.onset + k * p.interval, t);
        }
    }
    std::multiset<std::pair<double, AgentId>> got;
    for (const auto &ev : events) {
        got.emplace(ev.due, ev.target);
    }
    CHECK(got == expected);
}

TEST_CASE("a forced pulse fires the afferent exactly once") {
    Network net = three_cell_chain();
    const auto events = net.force_fire(1, 7.0);
    CHECK(events.empty()); // no outgoing links yet
    CHECK(net.neuron(1).spikes == std::vector<SimTime>{7.0});

    // A pulse inside the refractory window is swallowed.
    CHECK(net.force_fire(1, 8.0).empty());
    CHECK(net.neuron(1).spikes == std::vector<SimTime>{7.0});
}

TEST_CASE("muscle discharge accepts only innervating motoneurons, in order") {
    Network net = three_cell_chain();
    net.record_discharge(4, 3, 12.0);
    CHECK(net.muscle(4).discharge_log == std::vector<SimTime>{12.0});

    net.record_discharge(4, 3, 20.0);
    CHECK(net.muscle(4).discharge_log == std::vector<SimTime>{12.0, 20.0});

    CHECK_THROWS_AS(net.record_discharge(4, 2, 30.0), DomainError);
    CHECK_THROWS_AS(net.record_discharge(4, 3, 20.0), DomainError);
    CHECK(net.muscle(4).discharge_log == std::vector<SimTime>{12.0, 20.0});
}

TEST_CASE("deliveries over a removed link are swallowed") {
    Network net = three_cell_chain();
    const LinkId l = net.add_link(1, 2, SynapseSign::Excitatory, 5.0, 0.0, 20.0, 2.0);
    net.remove_link(l);
    CHECK(net.deliver_psp(l, 10.0).empty());
    CHECK(net.neuron(2).depol_log.empty());
}

TEST_CASE("a neuron with no incoming synapses never spikes from deliveries") {
    Network net = three_cell_chain();
    // Only forced pulses produce spikes on an unconnected cell.
    for (double t : {10.0, 20.0, 30.0}) {
        net.force_fire(1, t);
    }
    CHECK(net.neuron(2).spikes.empty());
    CHECK(net.neuron(3).spikes.empty());
}

TEST_CASE("link weights are kept inside their bounds at construction") {
    Network net = three_cell_chain();
    CHECK_THROWS_AS(net.add_link(1, 2, SynapseSign::Excitatory, 25.0, 0.0, 20.0, 1.0),
                    DomainError);
    CHECK_THROWS_AS(net.add_link(1, 2, SynapseSign::Excitatory, 5.0, 0.0, 20.0, 0.0),
                    DomainError);
    CHECK_THROWS_AS(net.add_link(1, 99, SynapseSign::Excitatory, 5.0, 0.0, 20.0, 1.0),
                    DomainError);
}

TEST_CASE("topology mutations are counted only after construction is sealed") {
    Network net = three_cell_chain();
    const LinkId l = net.add_link(1, 2, SynapseSign::Excitatory, 5.0, 0.0, 20.0, 2.0);
    CHECK(net.topology_mutations() == 0);
    net.seal_construction();
    net.remove_link(l);
    net.add_neuron(proto(NeuronRole::Interneuron));
    CHECK(net.topology_mutations() == 2);
}
