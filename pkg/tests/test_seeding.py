from skillassess.seeding import child_seed, rng_for, seed_sequence


def test_same_labels_same_stream():
    a = rng_for(7, "simulate", "learner-1").random(5)
    b = rng_for(7, "simulate", "learner-1").random(5)
    assert a.tolist() == b.tolist()


def test_different_labels_different_streams():
    a = rng_for(7, "simulate", "learner-1").random(5)
    b = rng_for(7, "simulate", "learner-2").random(5)
    assert a.tolist() != b.tolist()


def test_different_master_different_streams():
    a = rng_for(1, "train").random(5)
    b = rng_for(2, "train").random(5)
    assert a.tolist() != b.tolist()


def test_child_seed_deterministic_int():
    s = child_seed(3, "fold-train", "learner-9")
    assert isinstance(s, int)
    assert s == child_seed(3, "fold-train", "learner-9")
    assert s != child_seed(3, "fold-train", "learner-8")


def test_labels_can_mix_types():
    assert seed_sequence(0, "sweep", 4, 1) is not None
    assert child_seed(0, "sweep", 4, 1) != child_seed(0, "sweep", 4, 2)
