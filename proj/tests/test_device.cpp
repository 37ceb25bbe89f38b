#include "flashpuf/device.hpp"

#include <doctest.h>

#include <random>

using namespace flashpuf;

namespace {

ChipGeometry two_blocks() {
  ChipGeometry g;
  g.blocks_per_chip = 2;
  return g;
}

void send_address(NandBus& bus, const DeviceAddress& addr, const ChipGeometry& g) {
  for (auto b : encode_address(addr, g)) bus.step(BusEvent::address(b));
}

}  // namespace

TEST_CASE("bus read returns programmed data byte by byte") {
  FlashChip chip(1, two_blocks());
  PageData data = erased_page();
  data[0] = 0x12;
  data[2111] = 0x34;
  chip.program_page(1, 7, data);

  NandBus bus(chip);
  bus.step(BusEvent::command(Command::ReadSetup));
  send_address(bus, {1, 7, 0}, chip.geometry());
  bus.step(BusEvent::command(Command::ReadConfirm));
  CHECK(bus.state().phase == Phase::Busy);
  CHECK(bus.step(BusEvent::status_poll()) == kStatusOk);
  CHECK(bus.step(BusEvent::data_out()) == 0x12);
  for (int i = 1; i < 2111; ++i) bus.step(BusEvent::data_out());
  CHECK(bus.step(BusEvent::data_out()) == 0x34);
  CHECK_THROWS_AS(bus.step(BusEvent::data_out()), ProtocolViolation);
}

TEST_CASE("read starting mid-page begins at the latched column") {
  FlashChip chip(1, two_blocks());
  PageData data = erased_page();
  data[2048] = 0x00;  // first spare byte
  chip.program_page(0, 0, data);
  NandBus bus(chip);
  bus.step(BusEvent::command(Command::ReadSetup));
  send_address(bus, {0, 0, 2048}, chip.geometry());
  bus.step(BusEvent::command(Command::ReadConfirm));
  bus.step(BusEvent::status_poll());
  CHECK(bus.step(BusEvent::data_out()) == 0x00);
  CHECK(bus.step(BusEvent::data_out()) == 0xFF);
}

TEST_CASE("out-of-range block sets the fail bit instead of violating") {
  FlashChip chip(1, two_blocks());
  NandBus bus(chip);
  bus.step(BusEvent::command(Command::EraseSetup));
  bus.step(BusEvent::address(0x80));  // row 128 -> block 2
  bus.step(BusEvent::address(0x00));
  bus.step(BusEvent::command(Command::EraseConfirm));
  const auto status = bus.step(BusEvent::status_poll());
  CHECK((*status & kStatusFail) != 0);
  CHECK(bus.state().phase == Phase::Idle);
  CHECK(bus.step(BusEvent::command(Command::ReadStatus)) == kStatusFail);

  bus.step(BusEvent::command(Command::ReadSetup));
  for (auto b : AddressBytes{0, 0, 0x80, 0}) bus.step(BusEvent::address(b));
  bus.step(BusEvent::command(Command::ReadConfirm));
  CHECK((*bus.step(BusEvent::status_poll()) & kStatusFail) != 0);
  CHECK(bus.state().phase == Phase::Idle);
}

TEST_CASE("rejected bus events leave bus and array untouched") {
  FlashChip chip(5, two_blocks());
  NandBus bus(chip);
  std::mt19937_64 rng(5);
  const std::uint8_t opcodes[] = {0x00, 0x30, 0x80, 0x10, 0x60, 0xD0, 0x70, 0x42};
  for (int i = 0; i < 5000; ++i) {
    BusEvent e;
    switch (rng() % 5) {
      case 0: e = BusEvent::command(opcodes[rng() % std::size(opcodes)]); break;
      case 1: e = BusEvent::address(static_cast<std::uint8_t>(rng() % 2 ? 0 : rng())); break;
      case 2: e = BusEvent::data_in(static_cast<std::uint8_t>(rng())); break;
      case 3: e = BusEvent::data_out(); break;
      default: e = BusEvent::status_poll(); break;
    }
    const BusState before = bus.state();
    const PageData reg = bus.page_register();
    const auto ones = chip.count_ones(0) + chip.count_ones(1);
    try {
      bus.step(e);
    } catch (const ProtocolViolation&) {
      REQUIRE(bus.state() == before);
      REQUIRE(bus.page_register() == reg);
      REQUIRE(chip.count_ones(0) + chip.count_ones(1) == ones);
    }
  }
}

TEST_CASE("bus device and direct device agree") {
  DisturbParams p;
  FlashChip a(77, two_blocks(), p);
  FlashChip b(77, two_blocks(), p);
  SimulatedDevice direct(a);
  BusDevice bus(b);

  std::mt19937 rng(3);
  PageData pa;
  PageData pb;
  for (int op = 0; op < 300; ++op) {
    const std::uint32_t block = rng() % 2;
    const std::uint32_t page = rng() % kPagesPerBlock;
    switch (rng() % 4) {
      case 0:
        CHECK(direct.erase_block(block) == bus.erase_block(block));
        break;
      case 1: {
        PageData d;
        for (auto& x : d) x = static_cast<std::uint8_t>(rng());
        CHECK(direct.program_page(block, page, d) == bus.program_page(block, page, d));
        break;
      }
      case 2:
        CHECK(direct.program_latency(block, page, filled_page(0x00)) ==
              bus.program_latency(block, page, filled_page(0x00)));
        break;
      default:
        direct.read_page(block, page, pa);
        bus.read_page(block, page, pb);
        REQUIRE(pa == pb);
        break;
    }
  }
  CHECK(bus.erase_block(2) == kStatusFail);
  CHECK_THROWS_AS(direct.erase_block(2), AddressError);
}
