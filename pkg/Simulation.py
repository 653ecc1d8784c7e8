"""Discrete-event kernel: requests, VM lifetimes and channel completions on one clock."""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
import heapq
import logging
import math
from typing import Any, TextIO

from configs.Configs import EngineConfig
from core.Errors import (
    InternalInconsistencyError, InvalidArgumentError, NotFoundError, PlacementInfeasibleError, ValidationError,
)
from core.NetworkOperatingSystem import NetworkOperatingSystem
from core.Planner import Embedding, Planner
from messages.Report import RequestRecord
from messages.Request import PacketDescriptor, Processing, Request, Transmission, VmRequest
from models.PlacementPolicy import PlacementPolicy
from Power import EnergyLedger
from topology.Topology import MiddleboxSpec, PhysicalTopology, VirtualTopology, VmSpec

log = logging.getLogger(__name__)


class EventKind(str, Enum):
    REQUEST_ARRIVAL = "request_arrival"
    PROCESSING_DONE = "processing_done"
    TRANSMISSION_START = "transmission_start"
    TRANSMISSION_DONE = "transmission_done"
    VM_CREATE = "vm_create"
    VM_DESTROY = "vm_destroy"


@dataclass(order=True)
class Event:
    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)


class EventQueue:
    """Min-heap ordered by (time, sequence); equal times leave in insertion order."""

    def __init__(self):
        self._heap: list[Event] = []
        self._sequence = 0

    def push(self, time: float, kind: EventKind, payload=None) -> Event:
        event = Event(time, self._sequence, kind, payload)
        self._sequence += 1
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event | None:
        return heapq.heappop(self._heap) if self._heap else None

    def peek(self) -> Event | None:
        return self._heap[0] if self._heap else None

    def __len__(self):
        return len(self._heap)


@dataclass
class Job:
    request_id: str | None
    workload_mi: float
    middlebox: bool = False


@dataclass
class VmRuntime:
    spec: VmSpec
    free_cores: int = -1
    waiting: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.free_cores < 0:
            self.free_cores = self.spec.cores


@dataclass
class RequestRun:
    request: Request
    index: int = 0
    location: str | None = None
    # Middlebox whose transform rewrites the next outgoing transmission.
    pending_middlebox: str | None = None


@dataclass
class Metrics:
    clock: float
    records: list[RequestRecord]
    energy_wh_per_host: dict[str, float]
    max_hosts: int
    rejected_vms: int

    @property
    def energy_wh_total(self) -> float:
        return math.fsum(self.energy_wh_per_host[h] for h in sorted(self.energy_wh_per_host))


class Simulation:

    def __init__(self, topology: PhysicalTopology, virtual: VirtualTopology | None = None,
                 policy: PlacementPolicy | str = "bestfit", engine: EngineConfig | None = None,
                 trace: TextIO | None = None):
        self.topology = topology
        self.engine = engine or EngineConfig()
        self.nos = NetworkOperatingSystem(topology)
        self.planner = Planner(topology, self.nos, policy)
        self.ledger = EnergyLedger()
        self.queue = EventQueue()
        self.clock = 0.0
        self.vms: dict[str, VmRuntime] = {}
        self.runs: dict[str, RequestRun] = {}
        self.records: list[RequestRecord] = []
        self.rejected_vms = 0
        # transmission id -> (size_bits, bits delivered at completion)
        self.volumes: dict[str, tuple[float, float]] = {}
        self.trace = trace
        self.embedding: Embedding | None = None
        self._scheduled: dict[str, int] = {}
        self._handlers = {
            EventKind.REQUEST_ARRIVAL: self._on_arrival,
            EventKind.PROCESSING_DONE: self._on_processing_done,
            EventKind.TRANSMISSION_START: self._on_transmission_start,
            EventKind.TRANSMISSION_DONE: self._on_transmission_done,
            EventKind.VM_CREATE: self._on_vm_create,
            EventKind.VM_DESTROY: self._on_vm_destroy,
        }
        if virtual is not None:
            self.deploy(virtual)

    def deploy(self, vt: VirtualTopology, policy: PlacementPolicy | str | None = None) -> Embedding:
        """Embed a virtual topology at the current clock."""
        self.nos.advance(self.clock)
        self.ledger.accrue_all(self.planner.host_states(), self.clock)
        embedding = self.planner.embed(vt, policy)
        for element in vt.elements():
            self.vms[element.id] = VmRuntime(element)
        self.ledger.track_usage(self.planner.host_states(), self.clock)
        self.embedding = embedding
        self._trace("deploy", "virtual", f"{len(embedding.vm_to_host)} elements")
        return embedding

    def submit(self, r: Request) -> None:
        if r.submission_time < self.clock:
            raise InvalidArgumentError(f"request {r.id} submitted at {r.submission_time} < clock {self.clock}")
        if r.id in self.runs:
            raise InvalidArgumentError(f"duplicate request id {r.id}")
        for a in r.activities:
            if isinstance(a, Processing) and a.vm_id not in self.vms:
                raise ValidationError(f"request {r.id} references unknown vm {a.vm_id}")
            if isinstance(a, Transmission) and a.channel_id not in self.nos.channels:
                raise ValidationError(f"request {r.id} references unknown channel {a.channel_id}")
        self.runs[r.id] = RequestRun(r)
        self.queue.push(r.submission_time, EventKind.REQUEST_ARRIVAL, r.id)

    def submit_vm(self, vmr: VmRequest) -> None:
        if vmr.start_time < self.clock:
            raise InvalidArgumentError(f"vm request {vmr.id} starts at {vmr.start_time} < clock {self.clock}")
        self.queue.push(vmr.start_time, EventKind.VM_CREATE, vmr)

    def step(self) -> float | None:
        """Process one event; None once the queue is empty."""
        event = self.queue.pop()
        if event is None:
            return None
        if event.time < self.clock:
            raise InternalInconsistencyError(f"event {event.kind.value} at {event.time} before clock {self.clock}")
        self.clock = event.time
        self._handlers[event.kind](event.payload)
        return self.clock

    def run_until(self, t: float = math.inf) -> Metrics:
        """Process every event with time <= t.

        State is not advanced to t itself, so running to t1 and then t2 is the
        same as running straight to t2. Energy is reported as of t.
        """
        if t < self.clock:
            raise InvalidArgumentError(f"cannot run back to {t} from {self.clock}")
        while (event := self.queue.peek()) is not None and event.time <= t:
            self.step()
        horizon = t if math.isfinite(t) else max(self.clock, self.ledger.last_time)
        return Metrics(
            clock=horizon,
            records=list(self.records),
            energy_wh_per_host=self.ledger.energy_at(self.planner.host_states(), horizon),
            max_hosts=self.ledger.max_hosts_in_use,
            rejected_vms=self.rejected_vms,
        )

    def apply_middlebox(self, mb: MiddleboxSpec, descriptor: PacketDescriptor) -> PacketDescriptor:
        """Rewrite a packet leaving a middlebox whose burst has completed."""
        if mb.id not in self.vms:
            raise NotFoundError(f"middlebox {mb.id} is not running")
        forwarded = mb.transform.apply(descriptor)
        self._trace("middlebox", mb.id, f"{descriptor.destination}->{forwarded.destination} {forwarded.size_bytes!r}B")
        return forwarded

    def signature(self) -> tuple:
        return (
            self.clock,
            len(self.queue),
            self.nos.signature(),
            tuple(sorted(self.planner.placement.items())),
            tuple((r.request_id, r.finish_s) for r in self.records),
            self.ledger.total_wh,
        )

    # request flow

    def _on_arrival(self, request_id: str) -> None:
        self._trace(EventKind.REQUEST_ARRIVAL.value, request_id)
        self._advance(self.runs[request_id])

    def _advance(self, run: RequestRun) -> None:
        activities = run.request.activities
        if run.index == len(activities):
            self._complete(run)
            return
        activity = activities[run.index]
        if isinstance(activity, Processing):
            self._enqueue(activity.vm_id, Job(run.request.id, activity.workload_mi))
        else:
            self._start_transmission(run, activity)

    def _complete(self, run: RequestRun) -> None:
        r = run.request
        record = RequestRecord(r.id, r.request_class, r.submission_time, self.clock)
        self.records.append(record)
        del self.runs[r.id]
        self._trace("request_done", r.id, repr(record.response_s))

    def _enqueue(self, vm_id: str, job: Job) -> None:
        runtime = self.vms[vm_id]
        if runtime.free_cores > 0:
            self._start_job(runtime, job)
        else:
            runtime.waiting.append(job)

    def _start_job(self, runtime: VmRuntime, job: Job) -> None:
        runtime.free_cores -= 1
        duration = job.workload_mi / runtime.spec.mips_per_core
        self.queue.push(self.clock + duration, EventKind.PROCESSING_DONE, (runtime.spec.id, job))

    def _on_processing_done(self, payload) -> None:
        vm_id, job = payload
        runtime = self.vms[vm_id]
        runtime.free_cores += 1
        if runtime.free_cores > runtime.spec.cores:
            raise InternalInconsistencyError(f"vm {vm_id} has more free cores than it owns")
        if runtime.waiting:
            self._start_job(runtime, runtime.waiting.popleft())
        self._trace(EventKind.PROCESSING_DONE.value, vm_id, job.request_id or "")

        run = self.runs.get(job.request_id)
        if run is None:
            return
        run.location = vm_id
        if job.middlebox:
            run.pending_middlebox = vm_id
        else:
            run.index += 1
        self._advance(run)

    def _start_transmission(self, run: RequestRun, tx: Transmission) -> None:
        channel = self.nos.channels[tx.channel_id]
        vlink = channel.vlink
        sender = run.location if run.location in (vlink.src, vlink.dst) else vlink.src
        receiver = vlink.dst if sender == vlink.src else vlink.src
        descriptor = PacketDescriptor(sender, receiver, tx.packet_size_bytes)

        if run.pending_middlebox is not None:
            mb = self.planner.specs[run.pending_middlebox]
            run.pending_middlebox = None
            descriptor = self.apply_middlebox(mb, descriptor)
            if descriptor.destination != receiver:
                channel = self.nos.channels[self._channel_between(sender, descriptor.destination)]

        tx_id = f"{run.request.id}#{run.index}"
        payload = (run.request.id, channel.id, tx_id, descriptor.size_bytes * 8.0, descriptor.destination)
        self.queue.push(self.clock + channel.path.latency, EventKind.TRANSMISSION_START, payload)

    def _channel_between(self, a: str, b: str) -> str:
        for cid in self.nos.channels_of(a):
            vlink = self.nos.channels[cid].vlink
            if {vlink.src, vlink.dst} == {a, b}:
                return cid
        raise NotFoundError(f"no channel between {a} and {b}")

    def _on_transmission_start(self, payload) -> None:
        request_id, channel_id, tx_id, size_bits, destination = payload
        self.runs[request_id].location = destination
        self.nos.advance(self.clock)
        self.nos.on_transmission_start(channel_id, tx_id, size_bits)
        self._trace(EventKind.TRANSMISSION_START.value, tx_id, f"{channel_id} {size_bits!r}b")
        self._reschedule()

    def _on_transmission_done(self, payload) -> None:
        channel_id, tx_id, epoch = payload
        channel = self.nos.channels.get(channel_id)
        if channel is None or channel.epoch != epoch:
            return  # superseded by a rate change

        self.nos.advance(self.clock)
        size_bits = channel.inflight[tx_id].size_bits
        self.volumes[tx_id] = (size_bits, self.nos.attained(channel_id, tx_id))
        self.nos.on_transmission_finish(channel_id, tx_id)
        self._trace(EventKind.TRANSMISSION_DONE.value, tx_id, channel_id)
        self._reschedule()

        request_id = tx_id.rsplit("#", 1)[0]
        run = self.runs[request_id]
        run.index += 1
        if isinstance(self.planner.specs.get(run.location), MiddleboxSpec):
            self._enqueue(run.location, Job(request_id, self.engine.middlebox_burst_mi, middlebox=True))
        else:
            self._advance(run)

    def _reschedule(self) -> None:
        """Queue one completion per channel whose rate or membership changed."""
        for cid in sorted(self.nos.channels):
            channel = self.nos.channels[cid]
            if not channel.active_transmissions or self._scheduled.get(cid) == channel.epoch:
                continue
            self._scheduled[cid] = channel.epoch
            nxt = self.nos.next_completion(cid)
            if nxt is None:
                continue  # stalled until a rate changes
            t, tx_id = nxt
            self.queue.push(t, EventKind.TRANSMISSION_DONE, (cid, tx_id, channel.epoch))

    # VM lifetimes

    def _on_vm_create(self, vmr: VmRequest) -> None:
        self.ledger.accrue_all(self.planner.host_states(), self.clock)
        try:
            host_id = self.planner.place(vmr.vm)
        except PlacementInfeasibleError as e:
            self.rejected_vms += 1
            log.warning("rejected %s at t=%.3f: %s", vmr.id, self.clock, e)
            self._trace("vm_rejected", vmr.id)
            return
        self.vms[vmr.vm.id] = VmRuntime(vmr.vm)
        self.ledger.track_usage(self.planner.host_states(), self.clock)
        self.queue.push(vmr.end_time, EventKind.VM_DESTROY, vmr)
        self._trace(EventKind.VM_CREATE.value, vmr.id, host_id)

    def _on_vm_destroy(self, vmr: VmRequest) -> None:
        self.nos.advance(self.clock)
        self.ledger.accrue_all(self.planner.host_states(), self.clock)
        self.planner.release(vmr.vm.id)
        del self.vms[vmr.vm.id]
        self._scheduled = {cid: e for cid, e in self._scheduled.items() if cid in self.nos.channels}
        self.ledger.track_usage(self.planner.host_states(), self.clock)
        self._trace(EventKind.VM_DESTROY.value, vmr.id)

    def _trace(self, kind: str, subject: str, detail: str = "") -> None:
        if self.trace is not None:
            self.trace.write(f"{self.clock!r},{kind},{subject},{detail}\n")
