#include "protoobf/protocols.hpp"

#include <sstream>

#include "protoobf/spec_dsl.hpp"

namespace protoobf {

namespace {

const char* kModbusSpec = R"(# Modbus/TCP application frames: MBAP header plus function-coded PDU.
# Responses carry function | 0x80 so request and response bodies share the
# single dispatch byte; see the bundle notes for the other simplifications.
protocol modbus {
  node frame {
    type: sequence
    boundary: end
    children: [trans_id, proto_id, mb_len, pdu]
  }
  node trans_id { type: terminal boundary: fixed(2) }
  node proto_id { type: terminal boundary: fixed(2) }
  node mb_len   { type: terminal boundary: fixed(2) derives: length_of(pdu) }
  node pdu {
    type: sequence
    boundary: length(mb_len)
    children: [unit, fc,
               rd_coils, rd_disc, rd_hold, rd_input, wr_coil, wr_reg,
               wr_coils, wr_regs,
               rsp_rd_coils, rsp_rd_disc, rsp_rd_hold, rsp_rd_input,
               rsp_wr_coil, rsp_wr_reg, rsp_wr_coils, rsp_wr_regs]
  }
  node unit { type: terminal boundary: fixed(1) }
  node fc   { type: terminal boundary: fixed(1) }

  # 0x01..0x04: read requests (start address, quantity)
  node rd_coils { type: optional boundary: delegated present_if: fc == 0x01 child: rd_coils_body }
  node rd_coils_body { type: sequence boundary: delegated children: [rdc_addr, rdc_qty] }
  node rdc_addr { type: terminal boundary: fixed(2) }
  node rdc_qty  { type: terminal boundary: fixed(2) }

  node rd_disc { type: optional boundary: delegated present_if: fc == 0x02 child: rd_disc_body }
  node rd_disc_body { type: sequence boundary: delegated children: [rdd_addr, rdd_qty] }
  node rdd_addr { type: terminal boundary: fixed(2) }
  node rdd_qty  { type: terminal boundary: fixed(2) }

  node rd_hold { type: optional boundary: delegated present_if: fc == 0x03 child: rd_hold_body }
  node rd_hold_body { type: sequence boundary: delegated children: [rdh_addr, rdh_qty] }
  node rdh_addr { type: terminal boundary: fixed(2) }
  node rdh_qty  { type: terminal boundary: fixed(2) }

  node rd_input { type: optional boundary: delegated present_if: fc == 0x04 child: rd_input_body }
  node rd_input_body { type: sequence boundary: delegated children: [rdi_addr, rdi_qty] }
  node rdi_addr { type: terminal boundary: fixed(2) }
  node rdi_qty  { type: terminal boundary: fixed(2) }

  # 0x05, 0x06: single write requests (address, value)
  node wr_coil { type: optional boundary: delegated present_if: fc == 0x05 child: wr_coil_body }
  node wr_coil_body { type: sequence boundary: delegated children: [wc_addr, wc_val] }
  node wc_addr { type: terminal boundary: fixed(2) }
  node wc_val  { type: terminal boundary: fixed(2) }

  node wr_reg { type: optional boundary: delegated present_if: fc == 0x06 child: wr_reg_body }
  node wr_reg_body { type: sequence boundary: delegated children: [wreg_addr, wreg_val] }
  node wreg_addr { type: terminal boundary: fixed(2) }
  node wreg_val  { type: terminal boundary: fixed(2) }

  # 0x0f: write multiple coils, quantity counted in packed bytes
  node wr_coils { type: optional boundary: delegated present_if: fc == 0x0f child: wr_coils_body }
  node wr_coils_body {
    type: sequence
    boundary: delegated
    children: [wcs_addr, wcs_qty, wcs_bc, wcs_bytes]
  }
  node wcs_addr { type: terminal boundary: fixed(2) }
  node wcs_qty  { type: terminal boundary: fixed(2) derives: count_of(wcs_bytes) }
  node wcs_bc   { type: terminal boundary: fixed(1) derives: length_of(wcs_bytes) }
  node wcs_bytes { type: tabular boundary: counter(wcs_qty) child: wcs_byte }
  node wcs_byte { type: terminal boundary: fixed(1) }

  # 0x10: write multiple registers
  node wr_regs { type: optional boundary: delegated present_if: fc == 0x10 child: wr_regs_body }
  node wr_regs_body {
    type: sequence
    boundary: delegated
    children: [wrs_addr, wrs_qty, wrs_bc, wrs_words]
  }
  node wrs_addr { type: terminal boundary: fixed(2) }
  node wrs_qty  { type: terminal boundary: fixed(2) derives: count_of(wrs_words) }
  node wrs_bc   { type: terminal boundary: fixed(1) derives: length_of(wrs_words) }
  node wrs_words { type: tabular boundary: counter(wrs_qty) child: wrs_word }
  node wrs_word { type: sequence boundary: delegated children: [wrs_hi, wrs_lo] }
  node wrs_hi { type: terminal boundary: fixed(1) }
  node wrs_lo { type: terminal boundary: fixed(1) }

  # 0x81, 0x82: read coil / discrete-input responses (byte count + packed bytes)
  node rsp_rd_coils { type: optional boundary: delegated present_if: fc == 0x81 child: rrc_body }
  node rrc_body { type: sequence boundary: delegated children: [rrc_bc, rrc_data] }
  node rrc_bc { type: terminal boundary: fixed(1) derives: length_of(rrc_data) }
  node rrc_data { type: repetition boundary: length(rrc_bc) child: rrc_byte }
  node rrc_byte { type: terminal boundary: fixed(1) }

  node rsp_rd_disc { type: optional boundary: delegated present_if: fc == 0x82 child: rrd_body }
  node rrd_body { type: sequence boundary: delegated children: [rrd_bc, rrd_data] }
  node rrd_bc { type: terminal boundary: fixed(1) derives: length_of(rrd_data) }
  node rrd_data { type: repetition boundary: length(rrd_bc) child: rrd_byte }
  node rrd_byte { type: terminal boundary: fixed(1) }

  # 0x83, 0x84: read register responses (byte count + register words)
  node rsp_rd_hold { type: optional boundary: delegated present_if: fc == 0x83 child: rrh_body }
  node rrh_body { type: sequence boundary: delegated children: [rrh_bc, rrh_words] }
  node rrh_bc { type: terminal boundary: fixed(1) derives: length_of(rrh_words) }
  node rrh_words { type: repetition boundary: length(rrh_bc) child: rrh_word }
  node rrh_word { type: sequence boundary: delegated children: [rrh_hi, rrh_lo] }
  node rrh_hi { type: terminal boundary: fixed(1) }
  node rrh_lo { type: terminal boundary: fixed(1) }

  node rsp_rd_input { type: optional boundary: delegated present_if: fc == 0x84 child: rri_body }
  node rri_body { type: sequence boundary: delegated children: [rri_bc, rri_words] }
  node rri_bc { type: terminal boundary: fixed(1) derives: length_of(rri_words) }
  node rri_words { type: repetition boundary: length(rri_bc) child: rri_word }
  node rri_word { type: sequence boundary: delegated children: [rri_hi, rri_lo] }
  node rri_hi { type: terminal boundary: fixed(1) }
  node rri_lo { type: terminal boundary: fixed(1) }

  # 0x85, 0x86: single write responses echo address and value
  node rsp_wr_coil { type: optional boundary: delegated present_if: fc == 0x85 child: rwc_body }
  node rwc_body { type: sequence boundary: delegated children: [rwc_addr, rwc_val] }
  node rwc_addr { type: terminal boundary: fixed(2) }
  node rwc_val  { type: terminal boundary: fixed(2) }

  node rsp_wr_reg { type: optional boundary: delegated present_if: fc == 0x86 child: rwr_body }
  node rwr_body { type: sequence boundary: delegated children: [rwr_addr, rwr_val] }
  node rwr_addr { type: terminal boundary: fixed(2) }
  node rwr_val  { type: terminal boundary: fixed(2) }

  # 0x8f, 0x90: multiple write responses echo address and quantity
  node rsp_wr_coils { type: optional boundary: delegated present_if: fc == 0x8f child: rwcs_body }
  node rwcs_body { type: sequence boundary: delegated children: [rwcs_addr, rwcs_qty] }
  node rwcs_addr { type: terminal boundary: fixed(2) }
  node rwcs_qty  { type: terminal boundary: fixed(2) }

  node rsp_wr_regs { type: optional boundary: delegated present_if: fc == 0x90 child: rwrs_body }
  node rwrs_body { type: sequence boundary: delegated children: [rwrs_addr, rwrs_qty] }
  node rwrs_addr { type: terminal boundary: fixed(2) }
  node rwrs_qty  { type: terminal boundary: fixed(2) }

  root: frame
}
)";

const char* kHttpSpec = R"(# Simplified HTTP/1.x request: request line, a fixed marker header that
# signals whether a body follows, arbitrary further headers, blank line,
# optional body running to the end of the message.
protocol http {
  node request {
    type: sequence
    boundary: end
    children: [method, target, version, marker_name, marker_value, headers, body]
  }
  node method  { type: terminal boundary: delimited(0x20) }
  node target  { type: terminal boundary: delimited(0x20) }
  node version { type: terminal boundary: delimited(0x0d0a) }

  # Marker header, e.g. "X-Mark:1". A value of "1" announces a body.
  node marker_name  { type: terminal boundary: delimited(0x3a) }
  node marker_value { type: terminal boundary: delimited(0x0d0a) }

  node headers { type: repetition boundary: delimited(0x0d0a) child: header }
  node header { type: sequence boundary: delegated children: [hname, hvalue] }
  node hname  { type: terminal boundary: delimited(0x3a) }
  node hvalue { type: terminal boundary: delimited(0x0d0a) }

  node body { type: optional boundary: delegated present_if: marker_value == 0x31 child: body_data }
  node body_data { type: terminal boundary: end }

  root: request
}
)";

const char* kModbusOptionals[] = {
    "rd_coils", "rd_disc", "rd_hold", "rd_input", "wr_coil", "wr_reg",
    "wr_coils", "wr_regs", "rsp_rd_coils", "rsp_rd_disc", "rsp_rd_hold",
    "rsp_rd_input", "rsp_wr_coil", "rsp_wr_reg", "rsp_wr_coils", "rsp_wr_regs"};

// Frame script with exactly one body present (or none when `body` is empty).
std::string modbus_script(const std::string& fc, const std::string& body,
                          const std::string& body_lines) {
  std::ostringstream os;
  os << "V trans_id 0001\nV proto_id 0000\nV mb_len -\nV unit 11\nV fc " << fc << "\n";
  for (const char* opt : kModbusOptionals) {
    if (body == opt)
      os << "P " << opt << " 1\n" << body_lines;
    else
      os << "P " << opt << " 0\n";
  }
  return os.str();
}

Bytes text(const std::string& s) { return Bytes(s.begin(), s.end()); }

ProtocolBundle make_modbus() {
  ProtocolBundle b;
  b.name = "modbus";
  b.spec = kModbusSpec;
  b.notes =
      "Responses are distinguished by function | 0x80 instead of direction, so "
      "one frame format covers both; exception responses are not modeled. "
      "Write-multiple-coils (0x0f) counts packed bytes rather than individual "
      "coils, so quantity and byte count agree byte-for-byte. Only functions "
      "0x01-0x06, 0x0f and 0x10 are covered.";
  b.samples = {
      {"rd_coils_req", modbus_script("01", "rd_coils", "V rdc_addr 0013\nV rdc_qty 0025\n"),
       from_hex("000100000006110100130025")},
      {"rd_disc_req", modbus_script("02", "rd_disc", "V rdd_addr 00c4\nV rdd_qty 0016\n"),
       from_hex("000100000006110200c40016")},
      {"rd_hold_req", modbus_script("03", "rd_hold", "V rdh_addr 006b\nV rdh_qty 0003\n"),
       from_hex("0001000000061103006b0003")},
      {"rd_input_req", modbus_script("04", "rd_input", "V rdi_addr 0008\nV rdi_qty 0001\n"),
       from_hex("000100000006110400080001")},
      {"wr_coil_req", modbus_script("05", "wr_coil", "V wc_addr 00ac\nV wc_val ff00\n"),
       from_hex("000100000006110500acff00")},
      {"wr_reg_req", modbus_script("06", "wr_reg", "V wreg_addr 0001\nV wreg_val 0003\n"),
       from_hex("000100000006110600010003")},
      {"wr_coils_req",
       modbus_script("0f", "wr_coils",
                     "V wcs_addr 0013\nV wcs_qty -\nV wcs_bc -\n"
                     "N wcs_bytes 2\nV wcs_byte cd\nV wcs_byte 01\n"),
       from_hex("000100000009110f0013000202cd01")},
      {"wr_regs_req",
       modbus_script("10", "wr_regs",
                     "V wrs_addr 0001\nV wrs_qty -\nV wrs_bc -\n"
                     "N wrs_words 2\nV wrs_hi 00\nV wrs_lo 0a\nV wrs_hi 01\nV wrs_lo 02\n"),
       from_hex("00010000000b11100001000204000a0102")},
      {"rd_coils_rsp",
       modbus_script("81", "rsp_rd_coils",
                     "V rrc_bc -\nN rrc_data 3\nV rrc_byte cd\nV rrc_byte 6b\nV rrc_byte 05\n"),
       from_hex("000100000006118103cd6b05")},
      {"rd_disc_rsp",
       modbus_script("82", "rsp_rd_disc",
                     "V rrd_bc -\nN rrd_data 3\nV rrd_byte ac\nV rrd_byte db\nV rrd_byte 35\n"),
       from_hex("000100000006118203acdb35")},
      {"rd_hold_rsp",
       modbus_script("83", "rsp_rd_hold",
                     "V rrh_bc -\nN rrh_words 3\nV rrh_hi 02\nV rrh_lo 2b\n"
                     "V rrh_hi 00\nV rrh_lo 00\nV rrh_hi 00\nV rrh_lo 64\n"),
       from_hex("000100000009118306022b00000064")},
      {"rd_input_rsp",
       modbus_script("84", "rsp_rd_input",
                     "V rri_bc -\nN rri_words 1\nV rri_hi 00\nV rri_lo 0a\n"),
       from_hex("000100000005118402000a")},
      {"wr_coil_rsp", modbus_script("85", "rsp_wr_coil", "V rwc_addr 00ac\nV rwc_val ff00\n"),
       from_hex("000100000006118500acff00")},
      {"wr_reg_rsp", modbus_script("86", "rsp_wr_reg", "V rwr_addr 0001\nV rwr_val 0003\n"),
       from_hex("000100000006118600010003")},
      {"wr_coils_rsp", modbus_script("8f", "rsp_wr_coils", "V rwcs_addr 0013\nV rwcs_qty 000a\n"),
       from_hex("000100000006118f0013000a")},
      {"wr_regs_rsp", modbus_script("90", "rsp_wr_regs", "V rwrs_addr 0001\nV rwrs_qty 0002\n"),
       from_hex("000100000006119000010002")},
      {"unknown_fn", modbus_script("2b", "", ""), from_hex("000100000002112b")},
  };
  return b;
}

ProtocolBundle make_http() {
  ProtocolBundle b;
  b.name = "http";
  b.spec = kHttpSpec;
  b.notes =
      "Requests only. The first header is a fixed marker header whose value "
      "announces whether a body follows (value \"1\" means present), standing "
      "in for Content-Length/Transfer-Encoding framing; a present body runs to "
      "the end of the message. Header names and values keep no optional "
      "whitespace around the colon.";
  b.samples = {
      {"get_no_body",
       "V method 474554\n"                        // GET
       "V target 2f696e6465782e68746d6c\n"        // /index.html
       "V version 485454502f312e31\n"             // HTTP/1.1
       "V marker_name 582d4d61726b\n"             // X-Mark
       "V marker_value 30\n"                      // 0
       "N headers 2\n"
       "V hname 486f7374\n"                       // Host
       "V hvalue 6578616d706c652e636f6d\n"        // example.com
       "V hname 416363657074\n"                   // Accept
       "V hvalue 2a2f2a\n"                        // */*
       "P body 0\n",
       text("GET /index.html HTTP/1.1\r\nX-Mark:0\r\nHost:example.com\r\n"
            "Accept:*/*\r\n\r\n")},
      {"post_with_body",
       "V method 504f5354\n"                      // POST
       "V target 2f7375626d6974\n"                // /submit
       "V version 485454502f312e31\n"
       "V marker_name 582d4d61726b\n"
       "V marker_value 31\n"                      // 1
       "N headers 1\n"
       "V hname 436f6e74656e742d54797065\n"       // Content-Type
       "V hvalue 746578742f706c61696e\n"          // text/plain
       "P body 1\n"
       "V body_data 68656c6c6f\n",                // hello
       text("POST /submit HTTP/1.1\r\nX-Mark:1\r\nContent-Type:text/plain\r\n"
            "\r\nhello")},
      {"head_no_headers",
       "V method 48454144\n"                      // HEAD
       "V target 2f\n"                            // /
       "V version 485454502f312e30\n"             // HTTP/1.0
       "V marker_name 582d4d61726b\n"
       "V marker_value 30\n"
       "N headers 0\n"
       "P body 0\n",
       text("HEAD / HTTP/1.0\r\nX-Mark:0\r\n\r\n")},
      {"post_empty_body",
       "V method 504f5354\n"
       "V target 2f70696e67\n"                    // /ping
       "V version 485454502f312e31\n"
       "V marker_name 582d4d61726b\n"
       "V marker_value 31\n"
       "N headers 0\n"
       "P body 1\n"
       "V body_data -\n",
       text("POST /ping HTTP/1.1\r\nX-Mark:1\r\n\r\n")},
  };
  return b;
}

}  // namespace

FormatGraph ProtocolBundle::graph() const { return parse_spec(spec); }

const ProtocolBundle& modbus_bundle() {
  static const ProtocolBundle b = make_modbus();
  return b;
}

const ProtocolBundle& http_bundle() {
  static const ProtocolBundle b = make_http();
  return b;
}

std::vector<const ProtocolBundle*> all_bundles() {
  return {&modbus_bundle(), &http_bundle()};
}

const ProtocolBundle* find_bundle(const std::string& name) {
  for (const auto* b : all_bundles())
    if (b->name == name) return b;
  return nullptr;
}

}  // namespace protoobf
