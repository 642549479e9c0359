//! Physical layer: Gray-coded QAM constellations, the OFDM modem, and AWGN.

pub mod constellation;
pub mod noise;
pub mod ofdm;
