"""Channel-connected pipeline execution with stall accounting.

The five stages run as concurrent workers exchanging single RGB pixel
triples through bounded FIFO queues.  The first stage reads the mosaic from
memory (it needs a row window, not a stream) and feeds the first channel;
the median stage keeps an internal 3-row sliding buffer; the remaining
stages are pointwise and process one buffered row at a time.  Arithmetic is
delegated to the reference kernels on row slices, so the output is
bit-identical to the sequential pipeline no matter how the workers are
scheduled.

Two clocks are supported:

* ``wall`` -- real threads and real queues.  Blocking times are measured
  from the first failed push/pop attempt to the successful transfer; they
  are advisory (scheduler noise).
* ``virtual`` -- a deterministic discrete-event simulation of the same
  producer/consumer network.  Per-item stage latencies come from the
  per-pixel memory-access cost of each kernel, so the imbalance matches the
  instrumented traffic model.  In this mode ``busy + blocked_push +
  blocked_pop == wall_time`` exactly.

A worker fault poisons downstream queues and the run raises ``StageFault``
naming the originating stage.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .images import PlanarImage, RawBayerImage
from .kernels import demosaic, denoise, gamut_map, tone_map, transform
from .params import PipelineParams

PIPELINE_STAGES = ("demosaic", "denoise", "transform", "gamut", "tonemap")

_POISON = object()


class StageFault(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause!r}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ChannelConfig:
    depth: int = 64  # items per inter-stage queue; one item = one RGB triple

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"channel depth must be >= 1, got {self.depth}")


@dataclass
class StageStats:
    name: str
    items_processed: int = 0
    busy_time: float = 0.0
    blocked_push_time: float = 0.0
    blocked_pop_time: float = 0.0
    wall_time: float = 0.0

    @property
    def blocked_push_fraction(self) -> float:
        return self.blocked_push_time / self.wall_time if self.wall_time else 0.0

    @property
    def blocked_pop_fraction(self) -> float:
        return self.blocked_pop_time / self.wall_time if self.wall_time else 0.0


@dataclass
class DataflowResult:
    image: PlanarImage | None
    stats: dict[str, StageStats]
    makespan: float
    clock: str


# ---------------------------------------------------------------------------
# Virtual clock: discrete-event simulation of a bounded-queue stage chain
# ---------------------------------------------------------------------------

def simulate_chain(
    latencies: list[float], items: int, depth: int, names: list[str] | None = None
) -> tuple[list[StageStats], float]:
    """Exact steady-state timing of a linear stage chain with bounded queues.

    Per stage and item: wait for input (except the source), compute for the
    stage latency, then wait for space in the output queue (a slot frees
    when the consumer pops).  Waiting for the very first input is warmup,
    not blocking, so a stage's accounting starts at its first pop.
    """
    k = len(latencies)
    if k < 1 or items < 1:
        raise ValueError("need at least one stage and one item")
    if any(lat <= 0 for lat in latencies):
        raise ValueError("latencies must be positive")
    names = names or [f"stage{i}" for i in range(k)]
    stats = [StageStats(name=names[i], items_processed=items) for i in range(k)]
    pops = [np.empty(items) for _ in range(k)]  # pop time per item, per stage
    push_done = [0.0] * k  # push completion of this stage's previous item
    cur_push = [0.0] * k
    for j in range(items):
        for i in range(k):
            if j == 0:
                start = 0.0 if i == 0 else cur_push[i - 1]
            elif i == 0:
                start = push_done[0]
            else:
                start = max(push_done[i], cur_push[i - 1])
                stats[i].blocked_pop_time += start - push_done[i]
            done = start + latencies[i]
            stats[i].busy_time += latencies[i]
            if i < k - 1 and j >= depth:
                pushed = max(done, pops[i + 1][j - depth])
            else:
                pushed = done
            stats[i].blocked_push_time += pushed - done
            pops[i][j] = start
            cur_push[i] = pushed
            push_done[i] = pushed
    for s in stats:
        s.wall_time = s.busy_time + s.blocked_push_time + s.blocked_pop_time
    return stats, cur_push[k - 1]


@dataclass
class SyntheticRun:
    stats: list[StageStats]
    makespan: float


def run_synthetic_stages(
    latencies: list[float],
    items: int,
    ch: ChannelConfig = ChannelConfig(),
    clock: str = "virtual",
) -> SyntheticRun:
    """Run a chain of fixed-latency synthetic stages and report stalls."""
    if len(latencies) < 2:
        raise ValueError("need at least two stages")
    if clock == "virtual":
        stats, makespan = simulate_chain(list(latencies), items, ch.depth)
        return SyntheticRun(stats=stats, makespan=makespan)
    if clock != "wall":
        raise ValueError(f"unknown clock {clock!r}")

    def spin(seconds, st):
        t0 = time.perf_counter()
        end = t0 + seconds
        while time.perf_counter() < end:
            pass
        st.busy_time += time.perf_counter() - t0

    def spin_worker(lat):
        def work(item):
            end = time.perf_counter() + lat
            while time.perf_counter() < end:
                pass
            return [item]

        return work

    def feeder(channel, st):
        for item in range(items):
            spin(latencies[0], st)
            channel.put(item, st)
            st.items_processed += 1

    t0 = time.perf_counter()
    stats = _run_chain(
        feeder,
        "stage0",
        [(f"stage{i}", spin_worker(lat)) for i, lat in enumerate(latencies[1:], start=1)],
        ch.depth,
        sink=lambda item: None,
    )
    return SyntheticRun(stats=stats, makespan=time.perf_counter() - t0)


def stage_cost_units(n_points: int) -> dict[str, float]:
    """Per-pixel access-cost units for the virtual clock.

    Reads + writes + read-only element accesses of the per-pixel loop, so
    the stage imbalance matches the instrumented traffic model.
    """
    return {
        "demosaic": 10.0,
        "denoise": 30.0,
        "transform": 15.0,
        "gamut": float(6 * n_points + 18),
        "tonemap": 9.0,
    }


# ---------------------------------------------------------------------------
# Wall clock: one thread per stage, bounded queues, pixel granularity
# ---------------------------------------------------------------------------

class _Aborted(Exception):
    pass


class _Channel:
    """Bounded FIFO with stall accounting and abort support."""

    def __init__(self, depth: int, abort: threading.Event):
        self._q = queue.Queue(maxsize=depth)
        self._abort = abort

    def put(self, item, stats: StageStats):
        try:
            self._q.put_nowait(item)
            return
        except queue.Full:
            pass
        t0 = time.perf_counter()
        while True:
            if self._abort.is_set():
                raise _Aborted()
            try:
                self._q.put(item, timeout=0.02)
                stats.blocked_push_time += time.perf_counter() - t0
                return
            except queue.Full:
                continue

    def get(self, stats: StageStats):
        try:
            return self._q.get_nowait()
        except queue.Empty:
            pass
        t0 = time.perf_counter()
        while True:
            if self._abort.is_set():
                raise _Aborted()
            try:
                item = self._q.get(timeout=0.02)
                stats.blocked_pop_time += time.perf_counter() - t0
                return item
            except queue.Empty:
                continue

    def drain(self):
        while True:
            try:
                self._q.get_nowait()
            except queue.Empty:
                return

    def poison(self):
        self.drain()
        while True:
            try:
                self._q.put_nowait(_POISON)
                return
            except queue.Full:
                self.drain()


def _run_chain(feeder_fn, source_name, workers, depth, sink):
    """Linear worker chain; each worker maps one item to a list of items.

    ``feeder_fn(channel, stats)`` produces the source items.  A fault in any
    worker aborts the run, poisons downstream, and raises ``StageFault``.
    """
    abort = threading.Event()
    faults: list[tuple[str, BaseException]] = []
    k = len(workers)
    channels = [_Channel(depth, abort) for _ in range(k)]
    stats = [StageStats(name=source_name)] + [StageStats(name=name) for name, _ in workers]

    def feeder():
        st = stats[0]
        t_start = time.perf_counter()
        try:
            feeder_fn(channels[0], st)
            channels[0].put(_POISON, st)
        except _Aborted:
            pass
        except BaseException as exc:  # noqa: BLE001 - reported via StageFault
            faults.append((source_name, exc))
            abort.set()
            channels[0].poison()
        finally:
            st.wall_time = time.perf_counter() - t_start

    def stage_loop(i, name, fn):
        st = stats[i + 1]
        t_start = time.perf_counter()
        try:
            while True:
                item = channels[i].get(st)
                if item is _POISON:
                    if i + 1 < k:
                        channels[i + 1].put(_POISON, st)
                    return
                t0 = time.perf_counter()
                results = fn(item)
                st.busy_time += time.perf_counter() - t0
                st.items_processed += 1
                for result in results:
                    if i + 1 < k:
                        channels[i + 1].put(result, st)
                    else:
                        sink(result)
        except _Aborted:
            pass
        except BaseException as exc:  # noqa: BLE001 - reported via StageFault
            faults.append((name, exc))
            abort.set()
            if i + 1 < k:
                channels[i + 1].poison()
        finally:
            st.wall_time = time.perf_counter() - t_start

    threads = [threading.Thread(target=feeder, name=f"dataflow-{source_name}", daemon=True)]
    for i, (name, fn) in enumerate(workers):
        threads.append(
            threading.Thread(
                target=stage_loop, args=(i, name, fn), name=f"dataflow-{name}", daemon=True
            )
        )
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if faults:
        name, exc = faults[0]
        raise StageFault(name, exc)
    return stats


def _pointwise_row_worker(stage: str, params: PipelineParams, width: int):
    """Buffer one row of pixels, run the stage kernel on it, re-emit pixels."""
    kernel = {
        "transform": lambda img: transform(img, params.transform),
        "gamut": lambda img: gamut_map(img, params.gamut),
        "tonemap": lambda img: tone_map(img, params.tone),
    }[stage]

    row = np.empty((3, 1, width), np.float32)
    state = {"x": 0}

    def process(pixel):
        x = state["x"]
        row[0, 0, x], row[1, 0, x], row[2, 0, x] = pixel
        state["x"] = x + 1
        if state["x"] < width:
            return []
        state["x"] = 0
        img = kernel(PlanarImage(width=width, height=1, planes=row.copy()))
        p = img.planes
        return [(p[0, 0, i], p[1, 0, i], p[2, 0, i]) for i in range(width)]

    return process


def _median_middle_row(window: list[np.ndarray], width: int) -> list[tuple]:
    """Median row from a [prev, cur, next] window of upstream rows.

    The middle row of a 3-row image sees exactly this window, so the result
    matches the full-image median bit for bit.
    """
    img = PlanarImage(width=width, height=3, planes=np.stack(window, axis=1))
    mid = denoise(img).planes[:, 1, :]
    return [(mid[0, i], mid[1, i], mid[2, i]) for i in range(width)]


def _make_denoise_worker(width: int, height: int):
    window: deque[np.ndarray] = deque(maxlen=3)  # trailing rows, each (3, width)
    state = {"x": 0, "rows_done": 0}
    cur = np.empty((3, width), np.float32)

    def process(pixel):
        x = state["x"]
        cur[0, x], cur[1, x], cur[2, x] = pixel
        state["x"] = x + 1
        if state["x"] < width:
            return []
        state["x"] = 0
        window.append(cur.copy())
        state["rows_done"] += 1
        done = state["rows_done"]
        out: list[tuple] = []
        if done == 2:  # rows 0 and 1 available: emit row 0 (top edge replicated)
            out.extend(_median_middle_row([window[0], window[0], window[1]], width))
        elif done >= 3:  # emit row done-2 from its full window
            out.extend(_median_middle_row([window[0], window[1], window[2]], width))
        if done == height:  # bottom edge: emit the last row
            out.extend(_median_middle_row([window[-2], window[-1], window[-1]], width))
        return out

    return process


def run_pipeline_dataflow(
    raw: RawBayerImage,
    params: PipelineParams,
    ch: ChannelConfig = ChannelConfig(),
    clock: str = "wall",
    inject_fault: str | None = None,
) -> DataflowResult:
    """Run the five-stage pipeline through bounded channels.

    ``inject_fault`` (test hook) makes the named stage raise partway through
    to exercise the poisoning path.
    """
    w, h = raw.width, raw.height
    pixels = w * h

    if clock == "virtual":
        if inject_fault:
            raise ValueError("fault injection needs the wall clock")
        img = tone_map(
            gamut_map(transform(denoise(demosaic(raw)), params.transform), params.gamut),
            params.tone,
        )
        costs = stage_cost_units(params.gamut.n)
        latencies = [costs[s] for s in PIPELINE_STAGES]
        stats, makespan = simulate_chain(latencies, pixels, ch.depth, list(PIPELINE_STAGES))
        return DataflowResult(
            image=img, stats={s.name: s for s in stats}, makespan=makespan, clock="virtual"
        )
    if clock != "wall":
        raise ValueError(f"unknown clock {clock!r}")

    def demosaic_feeder(channel, st):
        t0 = time.perf_counter()
        out = demosaic(raw).planes
        st.busy_time += time.perf_counter() - t0
        count = 0
        for y in range(h):
            for x in range(w):
                channel.put((out[0, y, x], out[1, y, x], out[2, y, x]), st)
                st.items_processed += 1
                count += 1
                if inject_fault == "demosaic" and count > pixels // 2:
                    raise RuntimeError("injected fault in demosaic")

    fault_count = {"n": 0}

    def wrap(stage_name, fn):
        if inject_fault != stage_name:
            return fn

        def failing(item):
            fault_count["n"] += 1
            if fault_count["n"] > pixels // 2:
                raise RuntimeError(f"injected fault in {stage_name}")
            return fn(item)

        return failing

    workers = [
        ("denoise", wrap("denoise", _make_denoise_worker(w, h))),
        ("transform", wrap("transform", _pointwise_row_worker("transform", params, w))),
        ("gamut", wrap("gamut", _pointwise_row_worker("gamut", params, w))),
        ("tonemap", wrap("tonemap", _pointwise_row_worker("tonemap", params, w))),
    ]

    collected = np.empty((3, pixels), np.float32)
    sink_state = {"i": 0}

    def sink(item):
        i = sink_state["i"]
        collected[0, i], collected[1, i], collected[2, i] = item
        sink_state["i"] = i + 1

    t0 = time.perf_counter()
    stats_list = _run_chain(demosaic_feeder, "demosaic", workers, ch.depth, sink)
    makespan = time.perf_counter() - t0

    if sink_state["i"] != pixels:
        raise RuntimeError(f"sink collected {sink_state['i']} of {pixels} pixels")
    image = PlanarImage(width=w, height=h, planes=collected.reshape(3, h, w))
    return DataflowResult(
        image=image, stats={s.name: s for s in stats_list}, makespan=makespan, clock="wall"
    )
