"""Tests for parallel.py: shard fan-out and failure recording."""

import threading

import pytest

from stable_lab.exceptions import NumericError, StableLabError
from stable_lab.parallel import pick, record_failures, run_shards, run_sharded


class TestRunSharded:
    def test_serial_order(self):
        assert run_sharded(lambda i: i * i, 5) == [0, 1, 4, 9, 16]

    def test_results_independent_of_workers(self):
        job = lambda i: [i, i + 1]  # noqa: E731
        assert run_sharded(job, 7, workers=1) == run_sharded(job, 7, workers=3)

    def test_threads_used_with_workers(self):
        seen = set()

        def job(index):
            seen.add(threading.get_ident())
            return index

        assert run_sharded(job, 4, workers=2) == [0, 1, 2, 3]
        assert threading.main_thread().ident not in seen

    @pytest.mark.anyio
    async def test_async_gather_in_shard_order(self):
        assert await run_shards(lambda i: 10 - i, 4, workers=4) == [10, 9, 8, 7]


class TestRecordFailures:
    @pytest.mark.anyio
    async def test_lab_error_recorded(self):
        failures = []
        async with record_failures("estimate distance at n=16", failures):
            raise NumericError("no convergence")
        assert failures == [
            {"action": "estimate distance at n=16", "code": "NUMERIC_ERROR", "message": "[NUMERIC_ERROR] no convergence"}
        ]

    @pytest.mark.anyio
    async def test_unexpected_error_wrapped(self):
        failures = []
        with pytest.raises(StableLabError, match="Failed to sample: boom"):
            async with record_failures("sample", failures):
                raise RuntimeError("boom")
        assert failures == []

    @pytest.mark.anyio
    async def test_clean_block(self):
        failures = []
        async with record_failures("sample", failures):
            pass
        assert failures == []


class TestPick:
    def test_missing_keys_become_none(self):
        assert pick({"n": 4, "value": 0.1, "extra": 1}, "n", "value", "error") == {"n": 4, "value": 0.1, "error": None}
