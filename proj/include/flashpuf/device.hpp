// Device seam used by the extraction procedures.
//
// `FlashDevice` is the minimal page-level interface an extraction needs.
// `SimulatedDevice` forwards straight to a FlashChip; `BusDevice` drives the
// same chip through `NandBus`, one bus cycle at a time, the way firmware on
// a microcontroller would.

#pragma once

#include "flashpuf/chip.hpp"
#include "flashpuf/protocol.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

namespace flashpuf {

class DeviceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FlashDevice {
 public:
  virtual ~FlashDevice() = default;

  virtual std::uint32_t blocks() const = 0;
  virtual Status erase_block(std::uint32_t block) = 0;
  virtual Status program_page(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) = 0;
  virtual void read_page(std::uint32_t block, std::uint32_t page, std::span<std::uint8_t, kPageBytes> out) = 0;
  /// Programs and returns the measured operation time in microseconds.
  virtual double program_latency(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) = 0;

  /// `count` reads of one page; `out` receives the last read. Devices that
  /// can charge read disturb in bulk override this.
  virtual void read_page_repeated(std::uint32_t block, std::uint32_t page, std::uint64_t count,
                                  std::span<std::uint8_t, kPageBytes> out);
};

class SimulatedDevice final : public FlashDevice {
 public:
  explicit SimulatedDevice(FlashChip& chip) : chip_(&chip) {}

  std::uint32_t blocks() const override { return chip_->geometry().blocks_per_chip; }
  Status erase_block(std::uint32_t block) override { return chip_->erase_block(block); }
  Status program_page(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) override {
    return chip_->program_page(block, page, data);
  }
  void read_page(std::uint32_t block, std::uint32_t page, std::span<std::uint8_t, kPageBytes> out) override {
    chip_->read_page_into(block, page, out);
  }
  double program_latency(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) override {
    return chip_->program_latency(block, page, data);
  }
  void read_page_repeated(std::uint32_t block, std::uint32_t page, std::uint64_t count,
                          std::span<std::uint8_t, kPageBytes> out) override;

 private:
  FlashChip* chip_;
};

/// Binds the bus state machine to a chip. Rejected events throw
/// ProtocolViolation and leave both the bus and the chip untouched.
class NandBus {
 public:
  explicit NandBus(FlashChip& chip) : chip_(&chip) {}

  /// Applies one event; returns the byte driven on the I/O lines, if any.
  std::optional<std::uint8_t> step(const BusEvent& event);

  const BusState& state() const { return state_; }
  const PageData& page_register() const { return page_register_; }
  /// Busy time of the last program operation, microseconds.
  double last_program_time_us() const { return last_program_time_us_; }

 private:
  FlashChip* chip_;
  BusState state_;
  PageData page_register_ = erased_page();
  double last_program_time_us_ = 0.0;
};

/// FlashDevice that talks to the chip exclusively through NandBus cycles.
class BusDevice final : public FlashDevice {
 public:
  explicit BusDevice(FlashChip& chip) : chip_(&chip), bus_(chip) {}

  std::uint32_t blocks() const override { return chip_->geometry().blocks_per_chip; }
  Status erase_block(std::uint32_t block) override;
  Status program_page(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) override;
  void read_page(std::uint32_t block, std::uint32_t page, std::span<std::uint8_t, kPageBytes> out) override;
  double program_latency(std::uint32_t block, std::uint32_t page, std::span<const std::uint8_t, kPageBytes> data) override;

  NandBus& bus() { return bus_; }

 private:
  void send_address(std::uint32_t block, std::uint32_t page, std::uint32_t column);
  Status wait_ready();

  FlashChip* chip_;
  NandBus bus_;
};

}  // namespace flashpuf
