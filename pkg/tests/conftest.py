import pytest

from daisen import Task, TraceStore


def make_task(
    id,
    *,
    parent=None,
    category="Instruction",
    action="Exec",
    location="CU0",
    start=0.0,
    end=1.0,
    details=None,
):
    return Task(
        id=id,
        parent_id=parent,
        category=category,
        action=action,
        location=location,
        start=start,
        end=end,
        details=details or {},
    )


def quartet_tasks():
    """The canonical request pairing: ReqOut [0,10) at CU0, ReqIn [2,8) at L1_0."""
    ro = make_task(
        "ro0001", category="Request Out", action="Read Memory", location="CU0", start=0.0, end=10.0
    )
    ri = make_task(
        "ri0001",
        parent="ro0001",
        category="Request In",
        action="Read Memory",
        location="L1_0",
        start=2.0,
        end=8.0,
    )
    return [ro, ri]


@pytest.fixture
def quartet():
    return quartet_tasks()


@pytest.fixture
def quartet_store():
    return TraceStore.ingest(quartet_tasks(), mode="strict")
