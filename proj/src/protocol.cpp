#include "flashpuf/protocol.hpp"

#include <cstdio>

namespace flashpuf {

void ChipGeometry::validate() const {
  if (data_bytes_per_page != kDataBytesPerPage || spare_bytes_per_page != kSpareBytesPerPage) {
    throw std::invalid_argument("page layout must be 2048 data + 64 spare bytes");
  }
  if (pages_per_block != kPagesPerBlock) {
    throw std::invalid_argument("pages_per_block must be 64");
  }
  if (blocks_per_chip == 0) {
    throw std::invalid_argument("blocks_per_chip must be positive");
  }
  if (static_cast<std::uint64_t>(blocks_per_chip) * pages_per_block > 0x10000) {
    throw std::invalid_argument("row address exceeds 16 bits");
  }
}

std::optional<Command> parse_command(std::uint8_t byte) {
  switch (byte) {
    case 0x00: return Command::ReadSetup;
    case 0x30: return Command::ReadConfirm;
    case 0x80: return Command::ProgramSetup;
    case 0x10: return Command::ProgramConfirm;
    case 0x60: return Command::EraseSetup;
    case 0xD0: return Command::EraseConfirm;
    case 0x70: return Command::ReadStatus;
    default: return std::nullopt;
  }
}

AddressBytes encode_address(const DeviceAddress& addr, const ChipGeometry& geometry) {
  if (addr.block >= geometry.blocks_per_chip) throw AddressError("block out of range");
  if (addr.page >= geometry.pages_per_block) throw AddressError("page out of range");
  if (addr.column >= geometry.page_bytes()) throw AddressError("column out of range");
  const std::uint32_t row = addr.block * geometry.pages_per_block + addr.page;
  return {static_cast<std::uint8_t>(addr.column & 0xFF),
          static_cast<std::uint8_t>((addr.column >> 8) & 0x0F),
          static_cast<std::uint8_t>(row & 0xFF),
          static_cast<std::uint8_t>((row >> 8) & 0xFF)};
}

DeviceAddress decode_address(const AddressBytes& bytes, const ChipGeometry& geometry) {
  const std::uint32_t column = bytes[0] | (static_cast<std::uint32_t>(bytes[1]) << 8);
  const std::uint32_t row = bytes[2] | (static_cast<std::uint32_t>(bytes[3]) << 8);
  if (column >= geometry.page_bytes()) throw AddressError("column out of range");
  if (row >= geometry.rows()) throw AddressError("row out of range");
  return {row / geometry.pages_per_block, row % geometry.pages_per_block, column};
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Idle: return "Idle";
    case Phase::AwaitAddress: return "AwaitAddress";
    case Phase::DataIn: return "DataIn";
    case Phase::DataOut: return "DataOut";
    case Phase::Busy: return "Busy";
  }
  return "?";
}

std::string to_string(const BusEvent& event) {
  char buf[32];
  switch (event.kind) {
    case EventKind::Command: std::snprintf(buf, sizeof buf, "command 0x%02X", event.byte); break;
    case EventKind::Address: std::snprintf(buf, sizeof buf, "address 0x%02X", event.byte); break;
    case EventKind::DataIn: std::snprintf(buf, sizeof buf, "data-in 0x%02X", event.byte); break;
    case EventKind::DataOut: return "data-out";
    case EventKind::StatusPoll: return "status-poll";
  }
  return buf;
}

ProtocolViolation::ProtocolViolation(Phase phase, BusEvent event)
    : std::runtime_error("protocol violation: " + to_string(event) + " in phase " + to_string(phase)),
      phase_(phase),
      event_(event) {}

namespace {

// Column and row of a completed 4-byte address using the fixed page layout.
// Block range is checked by the device at confirm time.
std::optional<DeviceAddress> latch_full_address(const AddressBytes& raw) {
  const std::uint32_t column = raw[0] | (static_cast<std::uint32_t>(raw[1]) << 8);
  const std::uint32_t row = raw[2] | (static_cast<std::uint32_t>(raw[3]) << 8);
  if (column >= kPageBytes) return std::nullopt;
  return DeviceAddress{row / kPagesPerBlock, row % kPagesPerBlock, column};
}

BusState arm(const BusState& from, OpKind kind, std::uint8_t address_bytes) {
  BusState s = from;
  s.phase = Phase::AwaitAddress;
  s.kind = kind;
  s.address_bytes_remaining = address_bytes;
  s.address_buffer = {};
  s.latched_address.reset();
  s.column_cursor = 0;
  return s;
}

}  // namespace

Transition transition(const BusState& state, const BusEvent& event) {
  const auto reject = [&]() -> Transition { throw ProtocolViolation(state.phase, event); };

  if (event.kind == EventKind::StatusPoll) {
    Transition t{state, BusAction::EmitStatus, 0};
    if (state.phase == Phase::Busy) {
      const bool read_ok = state.kind == OpKind::Read && (state.status_register & kStatusFail) == 0;
      t.next.phase = read_ok ? Phase::DataOut : Phase::Idle;
    }
    return t;
  }

  if (event.kind == EventKind::Command) {
    const auto cmd = parse_command(event.byte);
    if (!cmd || state.phase == Phase::Busy) return reject();

    switch (*cmd) {
      case Command::ReadStatus:
        return {state, BusAction::EmitStatus, 0};
      case Command::ReadSetup:
      case Command::ProgramSetup:
      case Command::EraseSetup:
        if (state.phase != Phase::Idle && state.phase != Phase::DataOut) return reject();
        if (*cmd == Command::ReadSetup) return {arm(state, OpKind::Read, 4)};
        if (*cmd == Command::ProgramSetup) return {arm(state, OpKind::Program, 4)};
        return {arm(state, OpKind::Erase, 2)};
      case Command::ReadConfirm:
      case Command::EraseConfirm: {
        const OpKind kind = *cmd == Command::ReadConfirm ? OpKind::Read : OpKind::Erase;
        if (state.phase != Phase::AwaitAddress || state.kind != kind ||
            state.address_bytes_remaining != 0) {
          return reject();
        }
        Transition t{state};
        t.next.phase = Phase::Busy;
        t.action = kind == OpKind::Read ? BusAction::LoadPageRegister : BusAction::EraseBlock;
        return t;
      }
      case Command::ProgramConfirm: {
        if (state.phase != Phase::DataIn) return reject();
        Transition t{state, BusAction::ProgramPage, 0};
        t.next.phase = Phase::Busy;
        return t;
      }
    }
    return reject();
  }

  if (event.kind == EventKind::Address) {
    if (state.phase != Phase::AwaitAddress || state.address_bytes_remaining == 0) return reject();
    Transition t{state};
    BusState& s = t.next;
    const std::size_t total = s.kind == OpKind::Erase ? 2 : 4;
    const std::size_t index = total - s.address_bytes_remaining;
    // Erase cycles carry only the row bytes.
    s.address_buffer[s.kind == OpKind::Erase ? index + 2 : index] = event.byte;
    --s.address_bytes_remaining;
    if (s.address_bytes_remaining == 0) {
      s.latched_address = latch_full_address(s.address_buffer);
      if (s.latched_address) s.column_cursor = s.latched_address->column;
      if (s.kind == OpKind::Program) s.phase = Phase::DataIn;
    }
    return t;
  }

  if (event.kind == EventKind::DataIn) {
    if (state.phase != Phase::DataIn || state.column_cursor >= kPageBytes) return reject();
    Transition t{state, BusAction::StoreDataByte, state.column_cursor};
    ++t.next.column_cursor;
    return t;
  }

  // DataOut
  if (state.phase != Phase::DataOut || state.column_cursor >= kPageBytes) return reject();
  Transition t{state, BusAction::EmitDataByte, state.column_cursor};
  ++t.next.column_cursor;
  return t;
}

}  // namespace flashpuf
