import random

import pytest

from provql.errors import IngestError
from provql.model import (
    Entity,
    EntityKind,
    Event,
    EventCategory,
    EventGraph,
    attr_get,
    derive_category,
    event_fingerprint,
    identity_key,
    interval_gap,
    make_entity,
)

from helpers import StoreBuilder


def test_identity_key_process():
    assert identity_key(EntityKind.PROCESS, {"exename": "curl", "pid": 1001}) == "curl:1001"


def test_identity_key_file():
    assert identity_key(EntityKind.FILE, {"path": "/etc/passwd"}) == "/etc/passwd"


def test_identity_key_network():
    attrs = {"srcip": "10.0.0.1", "srcport": 4242, "dstip": "20.69.152.188",
             "dstport": 80, "protocol": "tcp"}
    assert identity_key(EntityKind.NETWORK, attrs) == "10.0.0.1:4242:20.69.152.188:80:tcp"


def test_identity_key_missing_field_names_it():
    with pytest.raises(IngestError, match="pid"):
        identity_key(EntityKind.PROCESS, {"exename": "curl"})


def test_identity_key_injective_over_random_tuples():
    rng = random.Random(11)
    seen = {}
    for _ in range(3000):
        kind = rng.choice(list(EntityKind))
        if kind is EntityKind.PROCESS:
            attrs = {"exename": f"p{rng.randrange(40)}", "pid": rng.randrange(500)}
            ident = (attrs["exename"], attrs["pid"])
        elif kind is EntityKind.FILE:
            attrs = {"path": f"/d{rng.randrange(40)}/f{rng.randrange(40)}"}
            ident = (attrs["path"],)
        else:
            attrs = {"srcip": f"10.0.0.{rng.randrange(9)}", "srcport": rng.randrange(9999),
                     "dstip": "10.1.0.1", "dstport": 80, "protocol": "tcp"}
            ident = (attrs["srcip"], attrs["srcport"], "10.1.0.1", 80, "tcp")
        key = identity_key(kind, attrs)
        prev = seen.setdefault((kind, key), ident)
        assert prev == ident


def test_attr_get_projects_fields():
    proc = make_entity(0, EntityKind.PROCESS,
                       {"exename": "curl", "pid": 42, "user": "u", "group": "u"})
    assert attr_get(proc, "pid") == 42
    assert attr_get(proc, "type") == "process"
    assert attr_get(proc, "name") == "curl"  # processes answer name with exename


def test_attr_get_absent_attribute_is_null():
    f = make_entity(0, EntityKind.FILE, {"path": "/etc/passwd"})
    assert attr_get(f, "dstip") is None
    assert attr_get(f, "pid") is None
    assert attr_get(f, "name") == "passwd"


def test_attr_get_event_fields():
    ev = Event(0, 1, 2, "read", 5, 9, 13, EventCategory.PROCESS_TO_FILE)
    assert attr_get(ev, "optype") == "read"
    assert attr_get(ev, "amount") == 13
    assert attr_get(ev, "path") is None


def test_derive_category():
    assert derive_category(EntityKind.PROCESS, EntityKind.FILE) is EventCategory.PROCESS_TO_FILE
    assert derive_category(EntityKind.PROCESS, EntityKind.PROCESS) is EventCategory.PROCESS_TO_PROCESS
    assert derive_category(EntityKind.PROCESS, EntityKind.NETWORK) is EventCategory.PROCESS_TO_NETWORK
    with pytest.raises(IngestError):
        derive_category(EntityKind.FILE, EntityKind.PROCESS)


def test_event_graph_closure_check():
    ent = make_entity(0, EntityKind.FILE, {"path": "/x"})
    ev = Event(0, 0, 1, "read", 0, 1, 0, EventCategory.PROCESS_TO_FILE)
    with pytest.raises(ValueError):
        EventGraph({("s", 0): ent}, {("s", 0): ev}).check_closure()


def test_interval_gap():
    a = Event(0, 0, 1, "read", 10, 20, 0, EventCategory.PROCESS_TO_FILE)
    b = Event(1, 1, 2, "write", 25, 30, 0, EventCategory.PROCESS_TO_FILE)
    c = Event(2, 1, 2, "write", 15, 18, 0, EventCategory.PROCESS_TO_FILE)
    assert interval_gap(a, b) == 5
    assert interval_gap(b, a) == 5
    assert interval_gap(a, c) == 0  # contained window


def test_fingerprint_uses_entity_keys():
    b = StoreBuilder()
    f = b.file("/tmp/x.tar")
    p = b.process("curl", 9)
    b.event(f, p, "read", ts=100, te=110, amount=7)
    store = b.build()
    ev = store.event(0)
    fp = event_fingerprint(ev, store.entity(ev.srcid), store.entity(ev.dstid))
    assert fp == ("/tmp/x.tar", "curl:9", "read", 100, 110, 7)


def test_make_entity_derives_file_name():
    ent = make_entity(0, EntityKind.FILE, {"path": "/var/log/app.log"})
    assert ent.attrs["name"] == "app.log"
    assert isinstance(ent, Entity)
