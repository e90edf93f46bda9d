import numpy as np

from tgrsim.rng import RngFactory, RngStream, StreamId


def test_same_id_same_sequence():
    a = RngStream(7, StreamId(0, 1, 2, "traffic"))
    b = RngStream(7, StreamId(0, 1, 2, "traffic"))
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]


def test_distinct_ids_give_distinct_sequences():
    f = RngFactory(7, 0)
    seqs = {tuple(f.stream(p, c, u).gen.random(4)) for p in ("a", "b") for c in (0, 1) for u in (0, 1)}
    assert len(seqs) == 8
    other_drop = RngFactory(7, 1).stream("a", 0, 0).gen.random(4)
    assert tuple(other_drop) not in seqs


def test_new_streams_do_not_shift_existing_ones():
    f = RngFactory(3, 0)
    first = f.stream("decode", 0, 0).gen.random(3)
    f.stream("something-else", 0, 0).gen.random(100)
    again = RngFactory(3, 0).stream("decode", 0, 0).gen.random(3)
    assert np.array_equal(first, again)


def test_streams_are_uncorrelated():
    f = RngFactory(11, 2)
    x = f.stream("a").gen.standard_normal(20000)
    y = f.stream("b").gen.standard_normal(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.03
