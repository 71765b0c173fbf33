#!/usr/bin/env python3

# /*
#  * Copyright Said Sef
#  *
#  * Licensed under the Apache License, Version 2.0 (the "License");
#  * you may not use this file except in compliance with the License.
#  * You may obtain a copy of the License at
#  *
#  *      https://www.apache.org/licenses/LICENSE-2.0
#  *
#  * Unless required by applicable law or agreed to in writing, software
#  * distributed under the License is distributed on an "AS IS" BASIS,
#  * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  * See the License for the specific language governing permissions and
#  * limitations under the License.
#  */

"""Shard fan-out for Monte Carlo work.

Shards are pure functions of their index, run off-thread under a semaphore and
gathered in index order, so merged results do not depend on the worker count.
"""

from __future__ import annotations

import asyncio
import logging
from collections.abc import Callable
from contextlib import asynccontextmanager
from typing import Any, TypedDict

from .exceptions import StableLabError

logger = logging.getLogger(__name__)


class FailureRecord(TypedDict):
    action: str
    code: str
    message: str


async def run_shards[T](job: Callable[[int], T], shards: int, workers: int = 1) -> list[T]:
    """Run ``job(0..shards-1)`` with at most ``workers`` threads; results in shard order."""
    limit = asyncio.Semaphore(max(1, workers))

    async def one(index: int) -> T:
        async with limit:
            logger.debug(f"shard {index + 1}/{shards} started")
            return await asyncio.to_thread(job, index)

    return list(await asyncio.gather(*(one(i) for i in range(shards))))


def run_sharded[T](job: Callable[[int], T], shards: int, workers: int = 1) -> list[T]:
    """Synchronous entry point; serial when ``workers`` is 1."""
    if workers <= 1 or shards <= 1:
        return [job(i) for i in range(shards)]
    return asyncio.run(run_shards(job, shards, workers))


@asynccontextmanager
async def record_failures(action: str, failures: list[FailureRecord]):
    """Record a StableLabError raised inside the block and carry on; wrap anything else."""
    try:
        yield
    except StableLabError as e:
        logger.error(f"Error during {action}: {e}")
        failures.append({"action": action, "code": e.code, "message": str(e)})
    except Exception as e:
        logger.error(f"Error during {action}: {e}")
        raise StableLabError(f"Failed to {action}: {e}") from e


def pick(data: dict[str, Any], *keys: str) -> dict[str, Any]:
    """Trim a result payload to the given keys (absent keys become None)."""
    return {k: data.get(k) for k in keys}
