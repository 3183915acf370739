// Capture reference QR module matrices from node-qrcode (byte mode, EC level L).
// usage: NODE_PATH=<dir with node_modules> node capture_qr_golden.js <hex payload>...
// Prints a JSON list of {payload_hex, version, mask, rows}.
const QRCode = require('qrcode');

const out = [];
for (const hex of process.argv.slice(2)) {
  const data = Buffer.from(hex, 'hex');
  const qr = QRCode.create([{ data, mode: 'byte' }], { errorCorrectionLevel: 'L' });
  const size = qr.modules.size;
  const rows = [];
  for (let r = 0; r < size; r++) {
    let s = '';
    for (let c = 0; c < size; c++) s += qr.modules.get(r, c) ? '1' : '0';
    rows.push(s);
  }
  out.push({ payload_hex: hex, version: qr.version, mask: qr.maskPattern, rows });
}
process.stdout.write(JSON.stringify(out));
