// NAND command/address/data cycle encoding and the bus state machine.
//
// The bus is modelled as an ordered stream of abstract events (command
// latch, address latch, data in, data out, ready/busy poll) instead of pin
// edges. `transition` is a pure function over `BusState`; `NandBus` in
// device.hpp binds it to a simulated chip.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace flashpuf {

inline constexpr std::size_t kDataBytesPerPage = 2048;
inline constexpr std::size_t kSpareBytesPerPage = 64;
inline constexpr std::size_t kPageBytes = kDataBytesPerPage + kSpareBytesPerPage;
inline constexpr std::size_t kPageBits = kPageBytes * 8;
inline constexpr std::uint32_t kPagesPerBlock = 64;
inline constexpr std::uint32_t kDefaultBlocksPerChip = 1024;
inline constexpr unsigned kColumnAddressBits = 12;

static_assert(kPageBytes == 2112);
static_assert(kPageBytes <= (1u << kColumnAddressBits));

struct ChipGeometry {
  std::uint32_t data_bytes_per_page = kDataBytesPerPage;
  std::uint32_t spare_bytes_per_page = kSpareBytesPerPage;
  std::uint32_t pages_per_block = kPagesPerBlock;
  std::uint32_t blocks_per_chip = kDefaultBlocksPerChip;

  std::uint32_t page_bytes() const { return data_bytes_per_page + spare_bytes_per_page; }
  std::uint32_t rows() const { return blocks_per_chip * pages_per_block; }

  /// Throws std::invalid_argument unless the page layout is the fixed
  /// 2048+64 / 64-page part and the row index fits the 16-bit row address.
  void validate() const;

  friend bool operator==(const ChipGeometry&, const ChipGeometry&) = default;
};

enum class Command : std::uint8_t {
  ReadSetup = 0x00,
  ReadConfirm = 0x30,
  ProgramSetup = 0x80,
  ProgramConfirm = 0x10,
  EraseSetup = 0x60,
  EraseConfirm = 0xD0,
  ReadStatus = 0x70,
};

/// Maps a raw byte in command position to a Command, or nullopt if the byte
/// is not a supported opcode.
std::optional<Command> parse_command(std::uint8_t byte);

struct DeviceAddress {
  std::uint32_t block = 0;
  std::uint32_t page = 0;
  std::uint32_t column = 0;

  friend bool operator==(const DeviceAddress&, const DeviceAddress&) = default;
};

using AddressBytes = std::array<std::uint8_t, 4>;

class AddressError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Column low, column high (top 4 bits zero), row low, row high.
AddressBytes encode_address(const DeviceAddress& addr, const ChipGeometry& geometry = {});
DeviceAddress decode_address(const AddressBytes& bytes, const ChipGeometry& geometry = {});

// ---------------------------------------------------------------------------
// Bus state machine

enum class OpKind : std::uint8_t { Read, Program, Erase };

enum class Phase : std::uint8_t { Idle, AwaitAddress, DataIn, DataOut, Busy };

inline constexpr std::uint8_t kStatusFail = 0x01;

struct BusState {
  Phase phase = Phase::Idle;
  OpKind kind = OpKind::Read;            // meaningful in AwaitAddress/Busy
  std::uint8_t address_bytes_remaining = 0;  // AwaitAddress only; 0 = awaiting confirm
  AddressBytes address_buffer{};         // raw bytes latched so far
  std::optional<DeviceAddress> latched_address;
  std::uint32_t column_cursor = 0;       // DataIn/DataOut
  std::uint8_t status_register = 0;

  friend bool operator==(const BusState&, const BusState&) = default;
};

enum class EventKind : std::uint8_t { Command, Address, DataIn, DataOut, StatusPoll };

struct BusEvent {
  EventKind kind = EventKind::StatusPoll;
  std::uint8_t byte = 0;  // ignored for DataOut and StatusPoll

  static BusEvent command(std::uint8_t b) { return {EventKind::Command, b}; }
  static BusEvent command(Command c) { return {EventKind::Command, static_cast<std::uint8_t>(c)}; }
  static BusEvent address(std::uint8_t b) { return {EventKind::Address, b}; }
  static BusEvent data_in(std::uint8_t b) { return {EventKind::DataIn, b}; }
  static BusEvent data_out() { return {EventKind::DataOut, 0}; }
  static BusEvent status_poll() { return {EventKind::StatusPoll, 0}; }

  friend bool operator==(const BusEvent&, const BusEvent&) = default;
};

std::string to_string(Phase phase);
std::string to_string(const BusEvent& event);

class ProtocolViolation : public std::runtime_error {
 public:
  ProtocolViolation(Phase phase, BusEvent event);
  Phase phase() const { return phase_; }
  const BusEvent& event() const { return event_; }

 private:
  Phase phase_;
  BusEvent event_;
};

/// Side effect the device must perform after a transition is accepted.
enum class BusAction : std::uint8_t {
  None,
  LoadPageRegister,  // READ confirmed: fill the page register from the array
  StoreDataByte,     // DataIn: page_register[column] = byte
  EmitDataByte,      // DataOut: output page_register[column]
  EmitStatus,        // output status_register
  ProgramPage,       // PROGRAM confirmed: program the page register
  EraseBlock,        // ERASE confirmed
};

struct Transition {
  BusState next;
  BusAction action = BusAction::None;
  std::uint32_t column = 0;  // column touched by StoreDataByte/EmitDataByte
};

/// Pure phase-diagram step. Throws ProtocolViolation for out-of-sequence
/// events; `state` is never modified.
///
///   READ    00h, 4 address, 30h, poll, data-out...
///   PROGRAM 80h, 4 address, data-in..., 10h, poll
///   ERASE   60h, 2 row address, D0h, poll
///   STATUS  70h from any phase except Busy
Transition transition(const BusState& state, const BusEvent& event);

}  // namespace flashpuf
