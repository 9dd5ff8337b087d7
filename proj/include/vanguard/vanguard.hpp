#pragma once

#include "vanguard/analog_model.hpp"
#include "vanguard/config.hpp"
#include "vanguard/dac_register_model.hpp"
#include "vanguard/errors.hpp"
#include "vanguard/harness.hpp"
#include "vanguard/psd.hpp"
#include "vanguard/ratio.hpp"
#include "vanguard/register_map.hpp"
#include "vanguard/serial.hpp"
#include "vanguard/som_simulator.hpp"
#include "vanguard/spi_link.hpp"
#include "vanguard/uart_protocol.hpp"
#include "vanguard/voltage_codec.hpp"
#include "vanguard/waveform_engine.hpp"
