"""Built-in fixtures: a small populated account and a pair of device-generation variants."""

from __future__ import annotations

import copy
from typing import Any

from ..model import (
    AccountIdentity,
    ActivityStatus,
    Appliance,
    ApplianceGroup,
    BluetoothState,
    Contact,
    ContactSource,
    DeviceProfile,
    DistanceUnit,
    HouseholdMember,
    NamedList,
    PairedDevice,
    PostalAddress,
    Role,
    SmartHomeTopology,
    TemperatureUnit,
    WifiDetail,
)
from ..timestamps import normalize_timestamp
from .state import MockState

__all__ = ["FIXTURE_TZ", "default_fixture", "default_state", "generation_fixtures", "local_ms"]

FIXTURE_TZ = "Europe/London"
FIXTURE_DAY = "2019-08-06"

SERIAL = "G090XG12345602GD"
DEVICE_TYPE = "A32DOYMUN6DTXA"
CUSTOMER_ID = "A1P2QRS3TLPH"

# (utterance id, local time on FIXTURE_DAY, transcript, status)
_COMMANDS = (
    ("u-0001", "15:53:02", "alexa", ActivityStatus.DISCARDED_NON_DEVICE_DIRECTED_INTENT),
    ("u-0002", "15:53:20", "what time is it", ActivityStatus.SUCCESS),
    ("u-0003", "15:53:41", "alexa what's the weather", ActivityStatus.SUCCESS),
    ("u-0004", "15:54:10", "alexa how is the traffic to inverness", ActivityStatus.SUCCESS),
    ("u-0005", "16:02:00", "what's the weather in Edinburgh", ActivityStatus.SUCCESS),
    ("u-0006", "16:05:00", "add milk to my shopping list", ActivityStatus.SUCCESS),
)


def local_ms(clock: str, day: str = FIXTURE_DAY, tz: str = FIXTURE_TZ) -> int:
    """Epoch ms of a wall-clock time in the fixture's time zone."""
    return normalize_timestamp(f"{day}T{clock}", tz).ms


def default_state() -> MockState:
    state = MockState(
        identity=AccountIdentity(CUSTOMER_ID, "Bob Smith", "dj.bob2@gmx.net"),
        members=[
            HouseholdMember(CUSTOMER_ID, "Bob", "Bob Smith", Role.ADULT, "dj.bob2@gmx.net"),
            HouseholdMember("A3KID0000SAM", "Sam", "Sam Smith", Role.CHILD),
        ],
        devices=[
            DeviceProfile(
                serial_number=SERIAL,
                device_type=DEVICE_TYPE,
                device_account_id="A072KQ7ZM81ZU0",
                software_version="2584225924",
                mac_address="68:54:FD:12:34:56",
                friendly_name="Bob's Echo",
                online=True,
                charging=False,
                locale="en-GB",
                timezone=FIXTURE_TZ,
                postal_address=PostalAddress("GB", "City of Edinburgh", "Edinburgh", "EH10 5DT", "Colinton Road", "10"),
                temperature_unit=TemperatureUnit.CELSIUS,
                distance_unit=DistanceUnit.METRIC,
            )
        ],
        wifi=[WifiDetail(SERIAL, DEVICE_TYPE, "68:54:fd:12:34:56", "HomeNet")],
        bluetooth=[BluetoothState(SERIAL, DEVICE_TYPE, (PairedDevice("Bob's Phone", True),), "Bob's Echo")],
        lists=[
            NamedList("list-todo", "To-do", local_ms("10:00:00", "2019-08-01"), local_ms("10:00:00", "2019-08-01")),
            NamedList("list-shop", "Shopping", local_ms("10:00:00", "2019-08-01"), local_ms("10:00:00", "2019-08-01")),
        ],
        topology=SmartHomeTopology(
            groups=(ApplianceGroup("Living Room", ("appl-lamp", SERIAL)),),
            appliances=(
                Appliance("appl-lamp", "Living Room Lamp", "Living Room"),
                Appliance("appl-plug", "Kitchen Plug", "Kitchen"),
                Appliance(SERIAL, "Bob's Echo", "Living Room"),
            ),
        ),
        contacts=[
            Contact("c-1", "Alice Jones", ("+44 7700 900123",), ("alice@example.org",), "1 High St, Leith", ContactSource.MANUAL),
            Contact("c-2", "Dad", ("+44 7700 900456",), (), None, ContactSource.IMPORTED),
        ],
        raw={
            "notifications": {
                "notifications": [
                    {
                        "id": "n-0001",
                        "type": "Alarm",
                        "status": "ON",
                        "deviceSerialNumber": SERIAL,
                        "createdDate": local_ms("21:30:00", "2019-08-05"),
                        "alarmTime": local_ms("07:00:00"),
                    }
                ]
            },
            "media-historical-queues": {"media": [{"title": "Track A"}, {"title": "Track B"}, {"title": "Track C"}]},
            "wake-word": {"wakeWords": [{"deviceSerialNumber": SERIAL, "wakeWord": "ALEXA"}]},
        },
        clock_ms=local_ms("17:00:00"),
    )
    for uid, clock, transcript, status in _COMMANDS:
        state.add_interaction(uid, transcript, at=local_ms(clock), status=status)
    state.add_list_item("Shopping", "item-milk", "milk", at=local_ms("16:05:01"))
    # no voice interaction around this one: residue of a deleted command
    state.add_list_item("Shopping", "item-bleach", "bleach", at=local_ms("16:10:00"))
    state.validate()
    return state


def default_fixture() -> dict[str, Any]:
    """Canonical-JSON fixture of :func:`default_state`."""
    return default_state().to_fixture()


def generation_fixtures() -> tuple[dict[str, Any], dict[str, Any]]:
    """Two accounts fed the same data on an older and a newer Echo Dot.

    They differ where the two device generations differed in practice:
    identifiers and versions, an extra appliance group on the older device,
    a locale setting on the newer one, reordered music history, and a
    different set of recent interactions.
    """
    newer = default_fixture()
    newer["devices"][0]["locale"] = "it-IT"
    newer["raw"]["media-historical-queues"] = {"media": [{"title": "Track C"}, {"title": "Track A"}, {"title": "Track B"}]}

    older = copy.deepcopy(default_fixture())
    serial, dtype, customer = "G090AB12340W3T", "A3S5BH2HU6VAYF", "ALU9XK2B42"
    email = "dj.bob4@gmx.net"
    older["identity"].update(customer_id=customer, email=email)
    older["members"][0].update(person_id=customer, email=email)
    dev = older["devices"][0]
    dev.update(serial_number=serial, device_type=dtype, software_version="641574820",
               device_account_id="A098ZT4QW3G4IM", mac_address="68:54:FD:AB:CD:EF")
    older["wifi"][0].update(device_serial=serial, device_type=dtype, mac_address="68:54:fd:ab:cd:ef")
    older["bluetooth"][0].update(device_serial=serial, device_type=dtype)
    topo = older["topology"]
    topo["groups"].append({"group_name": "Bedroom", "member_device_ids": ["appl-plug"], "extras": {}})
    topo["groups"][0]["member_device_ids"] = ["appl-lamp", serial]
    topo["appliances"][2]["appliance_id"] = serial
    for entry in older["interactions"]:
        for key in ("activity", "card"):
            art = entry[key]
            if art is None:
                continue
            if "device_serial" in art:
                art["device_serial"] = serial
            if key == "activity":
                art["device_type"] = dtype
                art["customer_id"] = customer
    for lst in older["lists"]:
        lst["list_id"] = lst["list_id"].replace("list-", "list-2g-")
    older["raw"]["notifications"]["notifications"][0]["id"] = "n-2g-0001"
    older["raw"]["notifications"]["notifications"][0]["deviceSerialNumber"] = serial
    older["raw"]["wake-word"]["wakeWords"][0]["deviceSerialNumber"] = serial
    # the newer device saw one fewer command
    newer["interactions"] = [i for i in newer["interactions"] if i["interaction_id"] != "u-0002"]
    return older, newer
