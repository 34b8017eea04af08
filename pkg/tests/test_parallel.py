import numpy as np

from src.utils.parallel import chunk_bounds, chunked_map, concatenate, get_threads, ordered_map, set_threads, tree_sum


def test_chunk_bounds_cover_range():
    assert chunk_bounds(5, 10, chunk=4) == [(5, 9), (9, 13), (13, 15)]
    assert chunk_bounds(0, 0, chunk=4) == []


def test_set_threads_floor(restore_threads):
    set_threads(0)
    assert get_threads() == 1


def test_ordered_map_keeps_item_order(restore_threads):
    set_threads(4)

    def work(item):
        return item * item

    assert ordered_map(work, range(50)) == [i * i for i in range(50)]


def test_chunked_map_independent_of_threads(restore_threads):
    def block(lo, hi):
        return np.sin(np.arange(lo, hi, dtype=float)).sum()

    set_threads(1)
    single = tree_sum(chunked_map(block, 3, 1000, chunk=64))
    set_threads(8)
    many = tree_sum(chunked_map(block, 3, 1000, chunk=64))
    assert single == many


def test_tree_sum_order():
    assert tree_sum([]) == 0.0
    assert tree_sum([1.0, 2.0, 3.0]) == 6.0
    parts = [np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0, 6.0])]
    assert tree_sum(parts).tolist() == [9.0, 12.0]


def test_concatenate_empty():
    assert concatenate([]).size == 0
    assert concatenate([np.array([1.0]), np.array([2.0])]).tolist() == [1.0, 2.0]
