use criterion::{black_box, criterion_group, criterion_main, Criterion, Throughput};

use pedalshare::telemetry::{
    encode_command, encode_frame, parse_frame, replay, CommandStreamParser, MotorCommand,
};
use pedalshare_bench::frame_lines;

fn frames(c: &mut Criterion) {
    let text = frame_lines(1000);
    let parsed: Vec<_> = text.lines().map(|l| parse_frame(l).unwrap()).collect();
    let mut g = c.benchmark_group("frames");
    g.throughput(Throughput::Elements(1000));
    g.bench_function("parse", |b| {
        b.iter(|| {
            text.lines()
                .map(|l| parse_frame(black_box(l)).unwrap().pedal_torque)
                .sum::<f64>()
        })
    });
    g.bench_function("encode", |b| {
        b.iter(|| {
            parsed
                .iter()
                .map(|f| encode_frame(black_box(f)).unwrap().len())
                .sum::<usize>()
        })
    });
    g.bench_function("replay", |b| {
        b.iter(|| replay(black_box(text.as_bytes())).unwrap())
    });
    g.finish();
}

fn commands(c: &mut Criterion) {
    let stream: String = (0..=255u8)
        .map(|v| encode_command(MotorCommand::from(v)).unwrap())
        .collect();
    let mut g = c.benchmark_group("commands");
    g.throughput(Throughput::Bytes(stream.len() as u64));
    g.bench_function("stream_parse", |b| {
        b.iter(|| {
            CommandStreamParser::new()
                .feed(black_box(stream.as_bytes()))
                .len()
        })
    });
    g.finish();
}

criterion_group!(benches, frames, commands);
criterion_main!(benches);
