use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("command value {0} outside 0..=255")]
pub struct CommandError(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StreamError {
    /// Saturates at `u32::MAX` for absurdly long digit runs.
    #[error("command value {0} exceeds 255")]
    Range(u32),
    #[error("terminator with no digits")]
    Empty,
    #[error("unexpected byte 0x{0:02x}")]
    BadByte(u8),
}

/// Motor request on the wire, 0-255.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotorCommand(pub u32);

impl MotorCommand {
    pub fn new(value: u32) -> Result<Self, CommandError> {
        if value <= 255 {
            Ok(Self(value))
        } else {
            Err(CommandError(value))
        }
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl From<u8> for MotorCommand {
    fn from(v: u8) -> Self {
        Self(u32::from(v))
    }
}

pub fn encode_command(cmd: MotorCommand) -> Result<String, CommandError> {
    MotorCommand::new(cmd.0).map(|c| format!("{}!", c.0))
}

/// Incremental `digits!` decoder. State carries across `feed` calls.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommandStreamParser {
    value: u32,
    digits: usize,
}

impl CommandStreamParser {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self) {
        self.value = 0;
        self.digits = 0;
    }

    pub fn push(&mut self, byte: u8) -> Option<Result<MotorCommand, StreamError>> {
        match byte {
            b'0'..=b'9' => {
                self.value = self
                    .value
                    .saturating_mul(10)
                    .saturating_add(u32::from(byte - b'0'));
                self.digits += 1;
                None
            }
            b'!' => {
                let out = match (self.digits, self.value) {
                    (0, _) => Err(StreamError::Empty),
                    (_, v) if v > 255 => Err(StreamError::Range(v)),
                    (_, v) => Ok(MotorCommand(v)),
                };
                self.reset();
                Some(out)
            }
            other => {
                self.reset();
                Some(Err(StreamError::BadByte(other)))
            }
        }
    }

    pub fn feed(&mut self, chunk: &[u8]) -> Vec<Result<MotorCommand, StreamError>> {
        chunk.iter().filter_map(|&b| self.push(b)).collect()
    }
}
