"""Independent reference models used as test oracles.

None of these share code with the package's timing models: the cache
reference keeps plain Python lists, and the pipeline reference computes
stage entry times with a closed recurrence instead of ticking.
"""

from __future__ import annotations

import math

from armwcet.isa import InstrClass, Stage, classify, reg_read_set, reg_write_set, stage_duration

_MEM = (InstrClass.LOAD, InstrClass.STORE, InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE)
_WRITES = (InstrClass.STORE, InstrClass.MULTI_STORE)


class ListCache:
    """Set-associative cache as a list of lists; FIFO or LRU, reads and
    write-back/allocate writes only."""

    def __init__(self, size, line, ways, policy, hit=1, transaction=10, bus=4):
        self.line, self.ways, self.policy = line, ways, policy
        self.nsets = size // line // ways
        self.sets = [[] for _ in range(self.nsets)]  # entries [block, dirty]
        self.hit, self.fill = hit, math.ceil(line / bus) * transaction

    def access(self, addr, write=False):
        block = addr // self.line
        s = self.sets[block % self.nsets]
        for entry in s:
            if entry[0] == block:
                if self.policy == "lru":
                    s.remove(entry)
                    s.append(entry)
                entry[1] = entry[1] or write
                return True, self.hit, 0
        cost = self.fill
        if len(s) == self.ways:
            victim = s.pop(0)
            if victim[1]:
                cost += self.fill
        s.append([block, write])
        return False, self.hit, cost

    def blocks(self):
        return [[b // self.nsets for b, _ in s] for s in self.sets]


def reference_completion(records, cfg):
    """Completion time of a fixed issue sequence at full clock speed.

    enter[i][s] = max(done[i][s-1], time stage s is vacated by i-1)
    Execute waits for a producing load still in the memory stage.
    """
    from armwcet.cache import Access, Cache

    icache, dcache = Cache(cfg.icache), Cache(cfg.dcache)
    table = cfg.durations
    prev_leave = [0] * 5  # when i-1 left stage s
    prev = None
    finish = 0
    for rec in records:
        instr = rec.instr
        klass = classify(instr)
        dur = [stage_duration(instr, s, table) for s in Stage]
        lat = icache.access(rec.address)
        f_mem, f_core = lat.memory, max(dur[0], lat.core)
        if rec.branch_taken and klass is InstrClass.COND_BRANCH:
            for off in (4, 8):
                extra = icache.access(rec.address + off)
                f_mem += extra.memory
                f_core += extra.core
        enter = [0] * 5
        leave = [0] * 5
        enter[0] = prev_leave[0]
        done = enter[0] + f_mem + f_core
        for s in range(1, 5):
            enter[s] = max(done, prev_leave[s])
            leave[s - 1] = enter[s]
            if s == 2 and prev is not None and _hazard(prev, rec):
                done = max(enter[s], prev_leave[3]) + dur[s]
            elif s == 3 and rec.scheduled and klass in _MEM and rec.data_addrs:
                kind = Access.WRITE if klass in _WRITES else Access.READ
                lats = [dcache.access(a, kind) for a in rec.data_addrs]
                done = enter[s] + sum(x.memory for x in lats) + max(dur[s], sum(x.core for x in lats))
            else:
                done = enter[s] + dur[s]
        leave[4] = done
        finish = done
        prev_leave, prev = leave, rec
    return finish


def _hazard(producer, consumer) -> bool:
    if not producer.scheduled:
        return False
    k = classify(producer.instr)
    if k in (InstrClass.MULTI_LOAD, InstrClass.MULTI_STORE):
        return True
    if k in (InstrClass.LOAD, InstrClass.MULTI_LOAD):
        return bool(reg_write_set(producer.instr) & reg_read_set(consumer.instr))
    return False
