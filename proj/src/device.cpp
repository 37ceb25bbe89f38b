#include "flashpuf/device.hpp"

namespace flashpuf {

void FlashDevice::read_page_repeated(std::uint32_t block, std::uint32_t page, std::uint64_t count,
                                     std::span<std::uint8_t, kPageBytes> out) {
  for (std::uint64_t i = 0; i < count; ++i) read_page(block, page, out);
}

void SimulatedDevice::read_page_repeated(std::uint32_t block, std::uint32_t page, std::uint64_t count,
                                         std::span<std::uint8_t, kPageBytes> out) {
  const PageData data = chip_->read_page_repeated(block, page, count);
  std::copy(data.begin(), data.end(), out.begin());
}

// ---------------------------------------------------------------------------
// NandBus

std::optional<std::uint8_t> NandBus::step(const BusEvent& event) {
  Transition t = transition(state_, event);

  const auto target_ok = [&](const BusState& s) {
    return s.latched_address && s.latched_address->block < chip_->geometry().blocks_per_chip;
  };

  std::optional<std::uint8_t> output;
  switch (t.action) {
    case BusAction::None:
      if (event.kind == EventKind::Command && event.byte == static_cast<std::uint8_t>(Command::ProgramSetup)) {
        page_register_ = erased_page();
      }
      break;
    case BusAction::LoadPageRegister:
      if (target_ok(t.next)) {
        chip_->read_page_into(t.next.latched_address->block, t.next.latched_address->page, page_register_);
        t.next.status_register = kStatusOk;
      } else {
        t.next.status_register = kStatusFail;
      }
      break;
    case BusAction::StoreDataByte:
      page_register_[t.column] = event.byte;
      break;
    case BusAction::EmitDataByte:
      output = page_register_[t.column];
      break;
    case BusAction::EmitStatus:
      output = state_.status_register;
      break;
    case BusAction::ProgramPage:
      if (target_ok(t.next)) {
        last_program_time_us_ =
            chip_->program_latency(t.next.latched_address->block, t.next.latched_address->page, page_register_);
        t.next.status_register = kStatusOk;
      } else {
        t.next.status_register = kStatusFail;
      }
      break;
    case BusAction::EraseBlock:
      if (target_ok(t.next)) {
        t.next.status_register = chip_->erase_block(t.next.latched_address->block);
      } else {
        t.next.status_register = kStatusFail;
      }
      break;
  }
  state_ = t.next;
  return output;
}

// ---------------------------------------------------------------------------
// BusDevice

void BusDevice::send_address(std::uint32_t block, std::uint32_t page, std::uint32_t column) {
  for (std::uint8_t b : encode_address({block, page, column})) bus_.step(BusEvent::address(b));
}

Status BusDevice::wait_ready() {
  const auto status = bus_.step(BusEvent::status_poll());
  return status.value_or(kStatusFail);
}

Status BusDevice::erase_block(std::uint32_t block) {
  // Addresses are encoded against the full 16-bit row space; the device
  // itself reports blocks it does not have through the status register.
  const AddressBytes addr = encode_address({block, 0, 0});
  bus_.step(BusEvent::command(Command::EraseSetup));
  bus_.step(BusEvent::address(addr[2]));
  bus_.step(BusEvent::address(addr[3]));
  bus_.step(BusEvent::command(Command::EraseConfirm));
  wait_ready();
  return bus_.step(BusEvent::command(Command::ReadStatus)).value_or(kStatusFail);
}

Status BusDevice::program_page(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) {
  bus_.step(BusEvent::command(Command::ProgramSetup));
  send_address(block, page, 0);
  for (std::uint8_t b : data) bus_.step(BusEvent::data_in(b));
  bus_.step(BusEvent::command(Command::ProgramConfirm));
  wait_ready();
  return bus_.step(BusEvent::command(Command::ReadStatus)).value_or(kStatusFail);
}

void BusDevice::read_page(std::uint32_t block, std::uint32_t page, std::span<std::uint8_t, kPageBytes> out) {
  bus_.step(BusEvent::command(Command::ReadSetup));
  send_address(block, page, 0);
  bus_.step(BusEvent::command(Command::ReadConfirm));
  if (wait_ready() & kStatusFail) throw DeviceError("read failed");
  for (auto& b : out) b = *bus_.step(BusEvent::data_out());
}

double BusDevice::program_latency(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) {
  if (program_page(block, page, data) & kStatusFail) throw DeviceError("program failed");
  return bus_.last_program_time_us();
}

}  // namespace flashpuf
