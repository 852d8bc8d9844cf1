"""mip6sim: byte-exact Mobile IPv6 routing mechanism simulator.

Models four ways of routing packets to and from mobile nodes
(bidirectional tunneling, route optimization, tunneling-based route
optimization and its improved zero-overhead variant) as exact packet
transformations, runs them over a deterministic discrete-event network
and accounts for every mobility byte on the wire.
"""

from .binding import (
    AmbiguousCoaError,
    BindingCache,
    BindingEntry,
    BindingUpdate,
    Mechanism,
    UpdateStatus,
    binding_update_packet,
    decode_binding_update,
    encode_binding_update,
    mechanism_from_name,
    select_mechanism,
)
from .mechanisms import (
    EndpointContext,
    MisdeliveryError,
    NoBindingError,
    UnknownSenderError,
    UpperLayerPacket,
    bt_inbound,
    bt_outbound,
    ha_forward,
    itro_inbound,
    itro_outbound,
    ro_inbound,
    ro_outbound,
    tro_inbound,
    tro_outbound,
)
from .metrics import (
    EmptyTraceError,
    OverheadReport,
    analytic_delay,
    analytic_overhead,
    comparison_report,
    comparison_runs,
    measured_delay,
    measured_overhead,
    render_csv,
    render_table,
)
from .packet import (
    Address,
    BaseHeader,
    DecodeError,
    HomeAddressOption,
    LengthMismatchError,
    NestingViolationError,
    NotATunnelError,
    OversizeError,
    Packet,
    PacketError,
    TruncatedError,
    Type2RoutingHeader,
    UnknownHeaderKindError,
    decapsulate,
    decode_packet,
    encapsulate,
    encode_packet,
    make_packet,
    wire_size,
)
from .scenario import (
    ScenarioConfig,
    ScenarioParseError,
    ScenarioValidationError,
    comparison_scenario,
    full_mtu_payload,
    load_scenario,
    scenario_from_dict,
)
from .simnet import (
    Delivery,
    HorizonExceededError,
    SimulationResult,
    TraceRecord,
    World,
    build_world,
    move_node,
    run_until_quiescent,
    send_ulp,
    step,
    trace_to_jsonl,
)

__version__ = "0.1.0"
