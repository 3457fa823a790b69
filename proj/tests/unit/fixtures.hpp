#pragma once

#include "spellattack/dataset.hpp"
#include "spellattack/p300.hpp"
#include "spellattack/synthgen.hpp"

namespace testing {

/// Small seeded P300 subject shared by the unit tests: 20 training and
/// 10 test characters at 5 repeats, victim trained once.
struct P300Fixture {
    spellattack::data::P300Dataset data;
    spellattack::p300::P300Victim victim;

    static const P300Fixture& get() {
        static const P300Fixture f = [] {
            P300Fixture x;
            auto cfg = spellattack::synth::SynthConfig::p300_default();
            x.data = spellattack::synth::synth_p300_dataset(cfg, 20, 10, 5);
            spellattack::p300::VictimConfig vc;
            x.victim = spellattack::p300::train_victim(x.data.train, vc, x.data.grid);
            return x;
        }();
        return f;
    }
};

}  // namespace testing
